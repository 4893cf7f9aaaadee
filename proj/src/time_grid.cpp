#include "dlab/time_grid.hpp"

#include <cmath>
#include <stdexcept>

namespace dlab {

TimeGrid make_grid(double t0, double T, std::int64_t n_steps) {
  if (!std::isfinite(t0) || !std::isfinite(T)) {
    throw std::invalid_argument("make_grid: bounds must be finite");
  }
  if (!(t0 < T)) {
    throw std::invalid_argument("make_grid: requires t0 < T");
  }
  if (n_steps < 2) {
    throw std::invalid_argument("make_grid: requires n_steps >= 2");
  }
  TimeGrid grid;
  grid.t0 = t0;
  grid.T = T;
  grid.n_steps = n_steps;
  grid.dt = (T - t0) / static_cast<double>(n_steps);
  return grid;
}

}  // namespace dlab
