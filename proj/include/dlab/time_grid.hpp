#pragma once

#include <cstdint>

namespace dlab {

/// Uniform grid on [t0, T] with points s_k = t0 + k*dt, k = 0..n_steps.
struct TimeGrid {
  double t0{0.0};
  double T{1.0};
  std::int64_t n_steps{1};
  double dt{1.0};

  double time_at(std::int64_t k) const { return t0 + static_cast<double>(k) * dt; }

  bool operator==(const TimeGrid&) const = default;
};

TimeGrid make_grid(double t0, double T, std::int64_t n_steps);

}  // namespace dlab
