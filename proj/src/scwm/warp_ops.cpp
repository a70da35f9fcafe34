#include "scwm/warp_ops.hpp"

#include <Eigen/Core>

#include "common/error.hpp"

namespace wgv::scwm {

nn::Var tps_grid(nn::Tape& t, nn::Var theta, const TpsBasis& basis) {
  const nn::Shape ts = theta->shape();
  const int K = basis.controls();
  if (static_cast<int>(ts.per_sample()) != 2 * K)
    fail(ErrorCode::ShapeMismatch, "TPS parameters " + ts.to_string() + " do not match " + std::to_string(K) +
                                       " control points");
  const Resolution res = basis.resolution();
  const int P = res.pixels();
  const Eigen::MatrixXf& M = basis.matrix_f();
  nn::Tensor out(nn::Shape{ts.n, 2, res.height, res.width});
  Eigen::VectorXf px(K), py(K);
  for (int n = 0; n < ts.n; ++n) {
    const float* th = theta->value.sample(n);
    for (int k = 0; k < K; ++k) {
      px(k) = static_cast<float>(basis.rest()[k].x) + th[2 * k];
      py(k) = static_cast<float>(basis.rest()[k].y) + th[2 * k + 1];
    }
    Eigen::Map<Eigen::VectorXf>(out.plane(n, 0), P).noalias() = M * px;
    Eigen::Map<Eigen::VectorXf>(out.plane(n, 1), P).noalias() = M * py;
  }
  return t.record(std::move(out), {theta}, [theta, &basis, K, P](nn::Node& self) {
    const Eigen::MatrixXf& M = basis.matrix_f();
    float* dth = theta->ensure_grad().data();
    for (int n = 0; n < self.shape().n; ++n) {
      const Eigen::VectorXf gx = M.transpose() * Eigen::Map<const Eigen::VectorXf>(self.grad.plane(n, 0), P);
      const Eigen::VectorXf gy = M.transpose() * Eigen::Map<const Eigen::VectorXf>(self.grad.plane(n, 1), P);
      float* d = dth + static_cast<std::size_t>(n) * 2 * K;
      for (int k = 0; k < K; ++k) {
        d[2 * k] += gx(k);
        d[2 * k + 1] += gy(k);
      }
    }
  });
}

nn::Var grid_sample(nn::Tape& t, nn::Var src, nn::Var grid) {
  const nn::Shape ss = src->shape(), gs = grid->shape();
  if (gs.c != 2 || gs.n != ss.n)
    fail(ErrorCode::ShapeMismatch, "sampling grid " + gs.to_string() + " does not fit source " + ss.to_string());
  const int n_out = static_cast<int>(gs.plane());
  nn::Tensor out(nn::Shape{ss.n, ss.c, gs.h, gs.w});
  for (int n = 0; n < ss.n; ++n)
    grid_sample<float>(src->value.sample(n), ss.c, ss.h, ss.w, grid->value.plane(n, 0), grid->value.plane(n, 1), n_out,
                       out.sample(n));
  return t.record(std::move(out), {src, grid}, [src, grid, ss, n_out](nn::Node& self) {
    float* dsrc = src->requires_grad ? src->ensure_grad().data() : nullptr;
    float* dgrid = grid->requires_grad ? grid->ensure_grad().data() : nullptr;
    for (int n = 0; n < ss.n; ++n)
      grid_sample_backward<float>(src->value.sample(n), ss.c, ss.h, ss.w, grid->value.plane(n, 0),
                                  grid->value.plane(n, 1), n_out, self.grad.sample(n),
                                  dsrc ? dsrc + n * ss.per_sample() : nullptr,
                                  dgrid ? dgrid + static_cast<std::size_t>(n) * 2 * n_out : nullptr,
                                  dgrid ? dgrid + (static_cast<std::size_t>(n) * 2 + 1) * n_out : nullptr);
  });
}

}  // namespace wgv::scwm
