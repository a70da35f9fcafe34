#pragma once

#include "nn/tape.hpp"
#include "scwm/tps.hpp"

namespace wgv::scwm {

// theta (N, 2K, 1, 1), interleaved per control point -> grid (N, 2, H, W)
// holding the x plane then the y plane.
nn::Var tps_grid(nn::Tape& t, nn::Var theta, const TpsBasis& basis);

// Bilinear zero-padded sampling of src (N, C, Hs, Ws) at grid (N, 2, H, W).
nn::Var grid_sample(nn::Tape& t, nn::Var src, nn::Var grid);

}  // namespace wgv::scwm
