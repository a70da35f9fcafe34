#include "nn/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "common/error.hpp"
#include "nn/loss_kernels.hpp"

namespace wgv::nn {
namespace {

using MatRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using MapCM = Eigen::Map<const MatRM>;

void check(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::ShapeMismatch, what);
}

void im2col(const float* x, int C, int H, int W, int k, int stride, int pad, int Ho, int Wo, float* cols) {
  const std::size_t P = static_cast<std::size_t>(Ho) * Wo;
  for (int c = 0; c < C; ++c) {
    const float* plane = x + static_cast<std::size_t>(c) * H * W;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        float* row = cols + (static_cast<std::size_t>(c) * k * k + ki * k + kj) * P;
        for (int oh = 0; oh < Ho; ++oh) {
          const int ih = oh * stride - pad + ki;
          float* out = row + static_cast<std::size_t>(oh) * Wo;
          if (ih < 0 || ih >= H) {
            std::memset(out, 0, sizeof(float) * Wo);
            continue;
          }
          const float* in = plane + static_cast<std::size_t>(ih) * W;
          if (stride == 1) {
            const int lo = std::max(0, pad - kj);
            const int hi = std::min(Wo, W + pad - kj);
            for (int ow = 0; ow < lo; ++ow) out[ow] = 0.0f;
            if (hi > lo) std::memcpy(out + lo, in + lo - pad + kj, sizeof(float) * (hi - lo));
            for (int ow = std::max(hi, lo); ow < Wo; ++ow) out[ow] = 0.0f;
          } else {
            for (int ow = 0; ow < Wo; ++ow) {
              const int iw = ow * stride - pad + kj;
              out[ow] = (iw >= 0 && iw < W) ? in[iw] : 0.0f;
            }
          }
        }
      }
    }
  }
}

void col2im_add(const float* cols, int C, int H, int W, int k, int stride, int pad, int Ho, int Wo, float* x) {
  const std::size_t P = static_cast<std::size_t>(Ho) * Wo;
  for (int c = 0; c < C; ++c) {
    float* plane = x + static_cast<std::size_t>(c) * H * W;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const float* row = cols + (static_cast<std::size_t>(c) * k * k + ki * k + kj) * P;
        for (int oh = 0; oh < Ho; ++oh) {
          const int ih = oh * stride - pad + ki;
          if (ih < 0 || ih >= H) continue;
          float* out = plane + static_cast<std::size_t>(ih) * W;
          const float* in = row + static_cast<std::size_t>(oh) * Wo;
          for (int ow = 0; ow < Wo; ++ow) {
            const int iw = ow * stride - pad + kj;
            if (iw >= 0 && iw < W) out[iw] += in[ow];
          }
        }
      }
    }
  }
}

Tensor scalar(float v) { return Tensor(Shape{1, 1, 1, 1}, v); }

// dfdx(x, y) is the derivative expressed through the input and the output.
template <class F, class D>
Var unary(Tape& t, Var x, F f, D dfdx) {
  Tensor y(x->shape());
  for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] = f(x->value.data()[i]);
  return t.record(std::move(y), {x}, [x, dfdx](Node& self) {
    Tensor& gx = x->ensure_grad();
    for (std::size_t i = 0; i < gx.size(); ++i)
      gx.data()[i] += self.grad.data()[i] * dfdx(x->value.data()[i], self.value.data()[i]);
  });
}

}  // namespace

Var conv2d(Tape& t, Var x, Var weight, Var bias, int stride, int pad) {
  const Shape xs = x->shape();
  const Shape ws = weight->shape();
  check(xs.c == ws.c && ws.h == ws.w, "conv2d: input " + xs.to_string() + " vs weight " + ws.to_string());
  const int k = ws.h;
  const int Ho = (xs.h + 2 * pad - k) / stride + 1;
  const int Wo = (xs.w + 2 * pad - k) / stride + 1;
  check(Ho > 0 && Wo > 0, "conv2d: output would be empty for input " + xs.to_string());
  const int Cout = ws.n;
  const int K = ws.c * k * k;
  const int P = Ho * Wo;
  const bool direct = k == 1 && stride == 1 && pad == 0;

  Tensor y(Shape{xs.n, Cout, Ho, Wo});
  std::vector<float> cols(direct ? 0 : static_cast<std::size_t>(K) * P);
  MapCM W(weight->value.data(), Cout, K);
  for (int n = 0; n < xs.n; ++n) {
    const float* src = x->value.sample(n);
    if (!direct) {
      im2col(src, xs.c, xs.h, xs.w, k, stride, pad, Ho, Wo, cols.data());
      src = cols.data();
    }
    MapM Y(y.sample(n), Cout, P);
    Y.noalias() = W * MapCM(src, K, P);
    if (bias)
      for (int o = 0; o < Cout; ++o) Y.row(o).array() += bias->value.data()[o];
  }

  return t.record(std::move(y), {x, weight, bias}, [=](Node& self) {
    std::vector<float> cols_b(direct ? 0 : static_cast<std::size_t>(K) * P);
    std::vector<float> dcols(static_cast<std::size_t>(K) * P);
    MapCM Wb(weight->value.data(), Cout, K);
    for (int n = 0; n < xs.n; ++n) {
      MapCM dY(self.grad.sample(n), Cout, P);
      if (weight->requires_grad) {
        const float* src = x->value.sample(n);
        if (!direct) {
          im2col(src, xs.c, xs.h, xs.w, k, stride, pad, Ho, Wo, cols_b.data());
          src = cols_b.data();
        }
        MapM dW(weight->ensure_grad().data(), Cout, K);
        dW.noalias() += dY * MapCM(src, K, P).transpose();
      }
      if (bias && bias->requires_grad) {
        float* db = bias->ensure_grad().data();
        // Plain loop: Eigen's vectorized sum depends on the buffer's alignment.
        for (int o = 0; o < Cout; ++o) {
          const float* row = self.grad.sample(n) + static_cast<std::size_t>(o) * P;
          float acc = 0.0f;
          for (int i = 0; i < P; ++i) acc += row[i];
          db[o] += acc;
        }
      }
      if (x->requires_grad) {
        float* dx = x->ensure_grad().sample(n);
        if (direct) {
          MapM(dx, K, P).noalias() += Wb.transpose() * dY;
        } else {
          MapM(dcols.data(), K, P).noalias() = Wb.transpose() * dY;
          col2im_add(dcols.data(), xs.c, xs.h, xs.w, k, stride, pad, Ho, Wo, dx);
        }
      }
    }
  });
}

Var instance_norm(Tape& t, Var x, Var gamma, Var beta, float eps) {
  const Shape s = x->shape();
  const std::size_t plane = s.plane();
  Tensor y(s);
  auto xhat = std::make_shared<std::vector<float>>(s.numel());
  auto inv_std = std::make_shared<std::vector<float>>(static_cast<std::size_t>(s.n) * s.c);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float* in = x->value.plane(n, c);
      double mean = 0.0;
      for (std::size_t i = 0; i < plane; ++i) mean += in[i];
      mean /= static_cast<double>(plane);
      double var = 0.0;
      for (std::size_t i = 0; i < plane; ++i) var += (in[i] - mean) * (in[i] - mean);
      var /= static_cast<double>(plane);
      const float is = static_cast<float>(1.0 / std::sqrt(var + eps));
      (*inv_std)[n * s.c + c] = is;
      const float g = gamma->value.data()[c];
      const float b = beta->value.data()[c];
      float* xh = xhat->data() + (static_cast<std::size_t>(n) * s.c + c) * plane;
      float* out = y.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        xh[i] = static_cast<float>((in[i] - mean) * is);
        out[i] = g * xh[i] + b;
      }
    }
  }
  return t.record(std::move(y), {x, gamma, beta}, [=](Node& self) {
    const float inv_n = 1.0f / static_cast<float>(plane);
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        const float* dy = self.grad.plane(n, c);
        const float* xh = xhat->data() + (static_cast<std::size_t>(n) * s.c + c) * plane;
        float sum_dy = 0.0f, sum_dy_xh = 0.0f;
        for (std::size_t i = 0; i < plane; ++i) {
          sum_dy += dy[i];
          sum_dy_xh += dy[i] * xh[i];
        }
        if (gamma->requires_grad) gamma->ensure_grad().data()[c] += sum_dy_xh;
        if (beta->requires_grad) beta->ensure_grad().data()[c] += sum_dy;
        if (x->requires_grad) {
          const float g = gamma->value.data()[c];
          const float is = (*inv_std)[n * s.c + c];
          float* dx = x->ensure_grad().plane(n, c);
          for (std::size_t i = 0; i < plane; ++i)
            dx[i] += g * is * (dy[i] - inv_n * sum_dy - xh[i] * inv_n * sum_dy_xh);
        }
      }
    }
  });
}

Var leaky_relu(Tape& t, Var x, float slope) {
  return unary(t, x, [slope](float v) { return v > 0.0f ? v : slope * v; },
               [slope](float v, float) { return v > 0.0f ? 1.0f : slope; });
}

Var relu(Tape& t, Var x) {
  return unary(t, x, [](float v) { return v > 0.0f ? v : 0.0f; }, [](float v, float) { return v > 0.0f ? 1.0f : 0.0f; });
}

Var tanh(Tape& t, Var x) {
  return unary(t, x, [](float v) { return std::tanh(v); }, [](float, float y) { return 1.0f - y * y; });
}

Var sigmoid(Tape& t, Var x) {
  return unary(t, x, [](float v) { return 1.0f / (1.0f + std::exp(-v)); }, [](float, float y) { return y * (1.0f - y); });
}

Var softmax_channels(Tape& t, Var x) {
  const Shape s = x->shape();
  const std::size_t plane = s.plane();
  Tensor y(s);
  for (int n = 0; n < s.n; ++n) {
    const float* in = x->value.sample(n);
    float* out = y.sample(n);
    for (std::size_t p = 0; p < plane; ++p) {
      float mx = in[p];
      for (int c = 1; c < s.c; ++c) mx = std::max(mx, in[c * plane + p]);
      float sum = 0.0f;
      for (int c = 0; c < s.c; ++c) {
        const float e = std::exp(in[c * plane + p] - mx);
        out[c * plane + p] = e;
        sum += e;
      }
      const float inv = 1.0f / sum;
      for (int c = 0; c < s.c; ++c) out[c * plane + p] *= inv;
    }
  }
  Var out = t.record(std::move(y), {x}, [x, s, plane](Node& self) {
    Tensor& gx = x->ensure_grad();
    for (int n = 0; n < s.n; ++n) {
      const float* yv = self.value.sample(n);
      const float* gy = self.grad.sample(n);
      float* g = gx.sample(n);
      for (std::size_t p = 0; p < plane; ++p) {
        float dot = 0.0f;
        for (int c = 0; c < s.c; ++c) dot += gy[c * plane + p] * yv[c * plane + p];
        for (int c = 0; c < s.c; ++c) g[c * plane + p] += yv[c * plane + p] * (gy[c * plane + p] - dot);
      }
    }
  });
  out->softmax_logits = x;
  return out;
}

Var upsample2x(Tape& t, Var x) {
  const Shape s = x->shape();
  Tensor y(Shape{s.n, s.c, s.h * 2, s.w * 2});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const float* in = x->value.plane(n, c);
      float* out = y.plane(n, c);
      for (int r = 0; r < s.h * 2; ++r)
        for (int q = 0; q < s.w * 2; ++q) out[r * s.w * 2 + q] = in[(r / 2) * s.w + q / 2];
    }
  return t.record(std::move(y), {x}, [x, s](Node& self) {
    Tensor& gx = x->ensure_grad();
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c) {
        const float* gy = self.grad.plane(n, c);
        float* g = gx.plane(n, c);
        for (int r = 0; r < s.h * 2; ++r)
          for (int q = 0; q < s.w * 2; ++q) g[(r / 2) * s.w + q / 2] += gy[r * s.w * 2 + q];
      }
  });
}

Var concat_channels(Tape& t, const std::vector<Var>& xs) {
  check(!xs.empty(), "concat of nothing");
  const Shape s0 = xs.front()->shape();
  int channels = 0;
  for (Var v : xs) {
    const Shape s = v->shape();
    check(s.n == s0.n && s.h == s0.h && s.w == s0.w, "concat: " + s.to_string() + " vs " + s0.to_string());
    channels += s.c;
  }
  Tensor y(Shape{s0.n, channels, s0.h, s0.w});
  for (int n = 0; n < s0.n; ++n) {
    float* out = y.sample(n);
    for (Var v : xs) {
      const std::size_t len = v->shape().per_sample();
      std::memcpy(out, v->value.sample(n), len * sizeof(float));
      out += len;
    }
  }
  return t.record(std::move(y), xs, [xs, s0](Node& self) {
    for (int n = 0; n < s0.n; ++n) {
      const float* g = self.grad.sample(n);
      for (Var v : xs) {
        const std::size_t len = v->shape().per_sample();
        if (v->requires_grad) {
          float* dst = v->ensure_grad().sample(n);
          for (std::size_t i = 0; i < len; ++i) dst[i] += g[i];
        }
        g += len;
      }
    }
  });
}

Var slice_channels(Tape& t, Var x, int begin, int end) {
  const Shape s = x->shape();
  check(0 <= begin && begin < end && end <= s.c, "slice_channels out of range");
  Tensor y(Shape{s.n, end - begin, s.h, s.w});
  for (int n = 0; n < s.n; ++n)
    std::memcpy(y.sample(n), x->value.plane(n, begin), sizeof(float) * (end - begin) * s.plane());
  return t.record(std::move(y), {x}, [x, s, begin, end](Node& self) {
    Tensor& gx = x->ensure_grad();
    const std::size_t len = (end - begin) * s.plane();
    for (int n = 0; n < s.n; ++n) {
      float* g = gx.plane(n, begin);
      const float* gy = self.grad.sample(n);
      for (std::size_t i = 0; i < len; ++i) g[i] += gy[i];
    }
  });
}

Var sum_channels(Tape& t, Var x, const std::vector<int>& channels) {
  const Shape s = x->shape();
  Tensor y(Shape{s.n, 1, s.h, s.w});
  for (int n = 0; n < s.n; ++n)
    for (int c : channels) {
      check(c >= 0 && c < s.c, "sum_channels index out of range");
      const float* in = x->value.plane(n, c);
      float* out = y.sample(n);
      for (std::size_t i = 0; i < s.plane(); ++i) out[i] += in[i];
    }
  return t.record(std::move(y), {x}, [x, s, channels](Node& self) {
    Tensor& gx = x->ensure_grad();
    for (int n = 0; n < s.n; ++n)
      for (int c : channels) {
        float* g = gx.plane(n, c);
        const float* gy = self.grad.sample(n);
        for (std::size_t i = 0; i < s.plane(); ++i) g[i] += gy[i];
      }
  });
}

Var crop_rows(Tape& t, Var x, int begin, int end) {
  const Shape s = x->shape();
  check(0 <= begin && begin < end && end <= s.h, "crop_rows out of range");
  const int rows = end - begin;
  Tensor y(Shape{s.n, s.c, rows, s.w});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      std::memcpy(y.plane(n, c), x->value.plane(n, c) + static_cast<std::size_t>(begin) * s.w,
                  sizeof(float) * rows * s.w);
  return t.record(std::move(y), {x}, [x, s, begin, rows](Node& self) {
    Tensor& gx = x->ensure_grad();
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c) {
        float* g = gx.plane(n, c) + static_cast<std::size_t>(begin) * s.w;
        const float* gy = self.grad.plane(n, c);
        for (int i = 0; i < rows * s.w; ++i) g[i] += gy[i];
      }
  });
}

Var add(Tape& t, Var a, Var b) {
  check(a->shape() == b->shape(), "add: " + a->shape().to_string() + " vs " + b->shape().to_string());
  Tensor y = a->value;
  y.add_(b->value);
  return t.record(std::move(y), {a, b}, [a, b](Node& self) {
    if (a->requires_grad) a->ensure_grad().add_(self.grad);
    if (b->requires_grad) b->ensure_grad().add_(self.grad);
  });
}

Var mul(Tape& t, Var a, Var b) {
  check(a->shape() == b->shape(), "mul: " + a->shape().to_string() + " vs " + b->shape().to_string());
  Tensor y(a->shape());
  for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] = a->value.data()[i] * b->value.data()[i];
  return t.record(std::move(y), {a, b}, [a, b](Node& self) {
    if (a->requires_grad) {
      float* g = a->ensure_grad().data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad.data()[i] * b->value.data()[i];
    }
    if (b->requires_grad) {
      float* g = b->ensure_grad().data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad.data()[i] * a->value.data()[i];
    }
  });
}

Var mul_broadcast(Tape& t, Var a, Var b) {
  const Shape sa = a->shape();
  const Shape sb = b->shape();
  check(sa.c == 1 && sa.n == sb.n && sa.h == sb.h && sa.w == sb.w,
        "mul_broadcast: " + sa.to_string() + " vs " + sb.to_string());
  const std::size_t plane = sb.plane();
  Tensor y(sb);
  for (int n = 0; n < sb.n; ++n)
    for (int c = 0; c < sb.c; ++c) {
      const float* m = a->value.sample(n);
      const float* in = b->value.plane(n, c);
      float* out = y.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) out[i] = m[i] * in[i];
    }
  return t.record(std::move(y), {a, b}, [a, b, sb, plane](Node& self) {
    for (int n = 0; n < sb.n; ++n)
      for (int c = 0; c < sb.c; ++c) {
        const float* gy = self.grad.plane(n, c);
        if (a->requires_grad) {
          float* g = a->ensure_grad().sample(n);
          const float* in = b->value.plane(n, c);
          for (std::size_t i = 0; i < plane; ++i) g[i] += gy[i] * in[i];
        }
        if (b->requires_grad) {
          float* g = b->ensure_grad().plane(n, c);
          const float* m = a->value.sample(n);
          for (std::size_t i = 0; i < plane; ++i) g[i] += gy[i] * m[i];
        }
      }
  });
}

Var scale(Tape& t, Var a, float s) {
  Tensor y = a->value;
  for (auto& v : y.vec()) v *= s;
  return t.record(std::move(y), {a}, [a, s](Node& self) {
    float* g = a->ensure_grad().data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += s * self.grad.data()[i];
  });
}

Var add_scalar(Tape& t, Var a, float s) {
  Tensor y = a->value;
  for (auto& v : y.vec()) v += s;
  return t.record(std::move(y), {a}, [a](Node& self) { a->ensure_grad().add_(self.grad); });
}

Var linear(Tape& t, Var x, Var weight, Var bias) {
  const Shape xs = x->shape();
  const int in = static_cast<int>(xs.per_sample());
  const int out = weight->shape().n;
  check(static_cast<int>(weight->shape().per_sample()) == in,
        "linear: input features " + std::to_string(in) + " vs weight " + weight->shape().to_string());
  Tensor y(Shape{xs.n, out, 1, 1});
  MapCM X(x->value.data(), xs.n, in);
  MapCM W(weight->value.data(), out, in);
  MapM Y(y.data(), xs.n, out);
  Y.noalias() = X * W.transpose();
  if (bias)
    for (int n = 0; n < xs.n; ++n)
      for (int o = 0; o < out; ++o) Y(n, o) += bias->value.data()[o];
  return t.record(std::move(y), {x, weight, bias}, [=](Node& self) {
    MapCM dY(self.grad.data(), xs.n, out);
    if (weight->requires_grad)
      MapM(weight->ensure_grad().data(), out, in).noalias() += dY.transpose() * MapCM(x->value.data(), xs.n, in);
    if (bias && bias->requires_grad) {
      float* db = bias->ensure_grad().data();
      for (int n = 0; n < xs.n; ++n)
        for (int o = 0; o < out; ++o) db[o] += dY(n, o);
    }
    if (x->requires_grad)
      MapM(x->ensure_grad().data(), xs.n, in).noalias() += dY * MapCM(weight->value.data(), out, in);
  });
}

Var l2_normalize_channels(Tape& t, Var x, float eps) {
  const Shape s = x->shape();
  const std::size_t plane = s.plane();
  Tensor y(s);
  auto norms = std::make_shared<std::vector<float>>(static_cast<std::size_t>(s.n) * plane);
  for (int n = 0; n < s.n; ++n) {
    const float* in = x->value.sample(n);
    float* out = y.sample(n);
    for (std::size_t p = 0; p < plane; ++p) {
      float ss = 0.0f;
      for (int c = 0; c < s.c; ++c) ss += in[c * plane + p] * in[c * plane + p];
      const float nv = std::sqrt(ss + eps * eps);
      (*norms)[n * plane + p] = nv;
      for (int c = 0; c < s.c; ++c) out[c * plane + p] = in[c * plane + p] / nv;
    }
  }
  return t.record(std::move(y), {x}, [x, s, plane, norms](Node& self) {
    Tensor& gx = x->ensure_grad();
    for (int n = 0; n < s.n; ++n) {
      const float* yv = self.value.sample(n);
      const float* gy = self.grad.sample(n);
      float* g = gx.sample(n);
      for (std::size_t p = 0; p < plane; ++p) {
        float dot = 0.0f;
        for (int c = 0; c < s.c; ++c) dot += gy[c * plane + p] * yv[c * plane + p];
        const float inv = 1.0f / (*norms)[n * plane + p];
        for (int c = 0; c < s.c; ++c) g[c * plane + p] += inv * (gy[c * plane + p] - yv[c * plane + p] * dot);
      }
    }
  });
}

Var correlation(Tape& t, Var a, Var b) {
  const Shape sa = a->shape();
  const Shape sb = b->shape();
  if (sa.c != sb.c || sa.n != sb.n)
    fail(ErrorCode::ChannelMismatch, "correlation: " + sa.to_string() + " vs " + sb.to_string());
  const int Na = static_cast<int>(sa.plane());
  const int Nb = static_cast<int>(sb.plane());
  const int C = sa.c;
  Tensor y(Shape{sa.n, Nb, sa.h, sa.w});
  for (int n = 0; n < sa.n; ++n) {
    // (Nb x C) * (C x Na)
    MapM(y.sample(n), Nb, Na).noalias() =
        MapCM(b->value.sample(n), C, Nb).transpose() * MapCM(a->value.sample(n), C, Na);
  }
  return t.record(std::move(y), {a, b}, [=](Node& self) {
    for (int n = 0; n < sa.n; ++n) {
      MapCM dY(self.grad.sample(n), Nb, Na);
      if (a->requires_grad)
        MapM(a->ensure_grad().sample(n), C, Na).noalias() += MapCM(b->value.sample(n), C, Nb) * dY;
      if (b->requires_grad)
        MapM(b->ensure_grad().sample(n), C, Nb).noalias() += MapCM(a->value.sample(n), C, Na) * dY.transpose();
    }
  });
}

Var cross_entropy(Tape& t, Var prob, const Tensor& target) {
  check(prob->shape() == target.shape(), "cross_entropy: " + prob->shape().to_string() + " vs " + target.shape().to_string());
  const Shape s = prob->shape();
  const std::size_t pixels_total = static_cast<std::size_t>(s.n) * s.plane();
  double total = 0.0;
  for (int n = 0; n < s.n; ++n) {
    std::span<const float> p(prob->value.sample(n), s.per_sample());
    std::span<const float> q(target.sample(n), s.per_sample());
    total += kernels::cross_entropy<float>(p, q, s.c, {}) * static_cast<double>(s.plane());
  }
  const float value = static_cast<float>(total / pixels_total);
  Tensor tgt = target;
  return t.record(scalar(value), {prob}, [prob, tgt = std::move(tgt), s, pixels_total](Node& self) {
    const float g = self.grad.item() / static_cast<float>(pixels_total);
    Var logits = prob->softmax_logits;
    if (logits && logits->requires_grad) {
      // d/dlogits of CE(softmax(z)) = p - t when each target pixel sums to 1.
      float* gz = logits->ensure_grad().data();
      for (std::size_t i = 0; i < tgt.size(); ++i) gz[i] += g * (prob->value.data()[i] - tgt.data()[i]);
      return;
    }
    std::vector<float> grad(s.per_sample());
    float* gp = prob->ensure_grad().data();
    for (int n = 0; n < s.n; ++n) {
      std::span<const float> p(prob->value.sample(n), s.per_sample());
      std::span<const float> q(tgt.sample(n), s.per_sample());
      kernels::cross_entropy<float>(p, q, s.c, grad);
      // kernel grads are per-sample means; rescale to the batch mean.
      const float k = g * static_cast<float>(s.plane());
      for (std::size_t i = 0; i < grad.size(); ++i) gp[n * s.per_sample() + i] += k * grad[i];
    }
  });
}

Var masked_abs_mean(Tape& t, Var x, const Tensor& mask) {
  check(x->shape() == mask.shape(), "masked_abs_mean: " + x->shape().to_string() + " vs " + mask.shape().to_string());
  std::vector<float> grad(x->value.size());
  const float value = kernels::masked_abs_mean<float>(mask.vec(), x->value.vec(), grad);
  return t.record(scalar(value), {x}, [x, grad = std::move(grad)](Node& self) {
    float* g = x->ensure_grad().data();
    const float s = self.grad.item();
    for (std::size_t i = 0; i < grad.size(); ++i) g[i] += s * grad[i];
  });
}

Var lsgan_d(Tape& t, Var real_scores, Var fake_scores) {
  std::vector<float> gr(real_scores->value.size()), gf(fake_scores->value.size());
  const float value = kernels::lsgan_d<float>(real_scores->value.vec(), fake_scores->value.vec(), gr, gf);
  return t.record(scalar(value), {real_scores, fake_scores},
                  [real_scores, fake_scores, gr = std::move(gr), gf = std::move(gf)](Node& self) {
                    const float s = self.grad.item();
                    if (real_scores->requires_grad) {
                      float* g = real_scores->ensure_grad().data();
                      for (std::size_t i = 0; i < gr.size(); ++i) g[i] += s * gr[i];
                    }
                    if (fake_scores->requires_grad) {
                      float* g = fake_scores->ensure_grad().data();
                      for (std::size_t i = 0; i < gf.size(); ++i) g[i] += s * gf[i];
                    }
                  });
}

Var lsgan_g(Tape& t, Var fake_scores) {
  std::vector<float> gf(fake_scores->value.size());
  const float value = kernels::lsgan_g<float>(fake_scores->value.vec(), gf);
  return t.record(scalar(value), {fake_scores}, [fake_scores, gf = std::move(gf)](Node& self) {
    float* g = fake_scores->ensure_grad().data();
    const float s = self.grad.item();
    for (std::size_t i = 0; i < gf.size(); ++i) g[i] += s * gf[i];
  });
}

Var l1_mean(Tape& t, Var a, const Tensor& b) {
  check(a->shape() == b.shape(), "l1_mean: " + a->shape().to_string() + " vs " + b.shape().to_string());
  std::vector<float> grad(a->value.size());
  const float value = kernels::l1_mean<float>(a->value.vec(), b.vec(), grad);
  return t.record(scalar(value), {a}, [a, grad = std::move(grad)](Node& self) {
    float* g = a->ensure_grad().data();
    const float s = self.grad.item();
    for (std::size_t i = 0; i < grad.size(); ++i) g[i] += s * grad[i];
  });
}

Var feature_matching(Tape& t, const std::vector<Var>& fake, const std::vector<Var>& real) {
  if (fake.size() != real.size())
    fail(ErrorCode::LayerCountMismatch, "feature matching: " + std::to_string(fake.size()) + " vs " +
                                            std::to_string(real.size()) + " layers");
  if (fake.empty()) return t.constant(scalar(0.0f));
  std::vector<Var> terms;
  std::vector<float> weights;
  for (std::size_t l = 0; l < fake.size(); ++l) {
    terms.push_back(l1_mean(t, fake[l], real[l]->value));
    weights.push_back(1.0f / static_cast<float>(fake.size()));
  }
  return weighted_sum(t, terms, weights);
}

Var masked_l1(Tape& t, Var a, const Tensor& b, const Tensor& region, int* present) {
  const Shape s = a->shape();
  check(s == b.shape(), "masked_l1: " + s.to_string() + " vs " + b.shape().to_string());
  check(region.shape() == Shape{s.n, 1, s.h, s.w}, "masked_l1 region " + region.shape().to_string());
  std::vector<float> grad(a->value.size(), 0.0f);
  double total = 0.0;
  int used = 0;
  for (int n = 0; n < s.n; ++n) {
    std::span<const float> r(region.sample(n), s.plane());
    float area = 0.0f;
    for (float v : r) area += v;
    if (area <= 0.0f) continue;
    ++used;
    total += kernels::masked_l1<float>(std::span<const float>(a->value.sample(n), s.per_sample()),
                                       std::span<const float>(b.sample(n), s.per_sample()), r, s.c,
                                       std::span<float>(grad.data() + n * s.per_sample(), s.per_sample()));
  }
  if (present) *present = used;
  if (used == 0) return t.constant(scalar(0.0f));
  const float inv = 1.0f / static_cast<float>(used);
  for (auto& g : grad) g *= inv;
  return t.record(scalar(static_cast<float>(total / used)), {a}, [a, grad = std::move(grad)](Node& self) {
    float* g = a->ensure_grad().data();
    const float sc = self.grad.item();
    for (std::size_t i = 0; i < grad.size(); ++i) g[i] += sc * grad[i];
  });
}

Var mean_square(Tape& t, Var x) {
  double s = 0.0;
  for (float v : x->value.vec()) s += static_cast<double>(v) * v;
  const std::size_t n = x->value.size();
  return t.record(scalar(static_cast<float>(s / n)), {x}, [x, n](Node& self) {
    float* g = x->ensure_grad().data();
    const float k = 2.0f * self.grad.item() / static_cast<float>(n);
    for (std::size_t i = 0; i < n; ++i) g[i] += k * x->value.data()[i];
  });
}

Var weighted_sum(Tape& t, const std::vector<Var>& scalars, const std::vector<float>& weights) {
  check(scalars.size() == weights.size(), "weighted_sum arity");
  float v = 0.0f;
  for (std::size_t i = 0; i < scalars.size(); ++i) v += weights[i] * scalars[i]->value.item();
  return t.record(scalar(v), scalars, [scalars, weights](Node& self) {
    for (std::size_t i = 0; i < scalars.size(); ++i)
      if (scalars[i]->requires_grad && weights[i] != 0.0f)
        scalars[i]->ensure_grad().data()[0] += weights[i] * self.grad.item();
  });
}

}  // namespace wgv::nn
