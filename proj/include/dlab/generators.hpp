#pragma once

#include <cstdint>

#include "dlab/sample_path.hpp"
#include "dlab/time_grid.hpp"

namespace dlab {

/// d-dimensional Brownian paths started at 0. Increment (path i, step k,
/// component c) is a pure function of (seed, i, k, c).
PathEnsemble gen_brownian(const TimeGrid& grid, int dim, std::int64_t n_paths,
                          std::uint64_t seed);

/// One-dimensional fractional Brownian motion with Hurst index in (0,1),
/// sampled exactly from the covariance (s^2H + r^2H - |s-r|^2H)/2 of the
/// elapsed times via a dense Cholesky factor. Desk scale: n_steps <= 2^14.
PathEnsemble gen_fbm(const TimeGrid& grid, double hurst, std::int64_t n_paths,
                     std::uint64_t seed);

}  // namespace dlab
