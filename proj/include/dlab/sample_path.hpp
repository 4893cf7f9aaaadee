#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "dlab/time_grid.hpp"

namespace dlab {

/// Discretized trajectory on a uniform grid. Values are stored for grid
/// points only; lookups beyond [t0, T] return the boundary value (the
/// constant-extension convention used throughout).
class SamplePath {
 public:
  SamplePath() = default;
  SamplePath(TimeGrid grid, int dim);
  SamplePath(TimeGrid grid, Eigen::MatrixXd values);

  const TimeGrid& grid() const { return grid_; }
  int dim() const { return static_cast<int>(values_.cols()); }
  std::int64_t n_steps() const { return grid_.n_steps; }

  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::MatrixXd& values() { return values_; }

  double at(std::int64_t step, int comp = 0) const { return values_(step, comp); }
  double& at(std::int64_t step, int comp = 0) { return values_(step, comp); }

  /// Row at `step` clamped into [0, n_steps]; implements the extension rule
  /// for index-level access (step may be negative or past the end).
  Eigen::RowVectorXd state_extended(std::int64_t step) const;

  std::int64_t clamp_step(std::int64_t step) const;

  /// Value at time s: nearest grid point, constant beyond [t0, T].
  Eigen::RowVectorXd value_at_time(double s) const;

  bool all_finite() const { return values_.allFinite(); }

 private:
  TimeGrid grid_;
  Eigen::MatrixXd values_;  // (n_steps+1) x dim
};

/// M paths sharing one grid. Regeneration from the same seed is
/// bit-for-bit identical under any parallel schedule.
struct PathEnsemble {
  std::vector<SamplePath> paths;
  std::uint64_t seed{0};
  std::string label;

  std::int64_t size() const { return static_cast<std::int64_t>(paths.size()); }
  const TimeGrid& grid() const { return paths.front().grid(); }
  int dim() const { return paths.front().dim(); }

  void validate() const;  // throws std::invalid_argument on broken invariants
};

/// Pointwise sum of two ensembles on the same grid.
PathEnsemble ensemble_sum(const PathEnsemble& a, const PathEnsemble& b,
                          const std::string& label = "sum");

/// Columnar CSV: path_id, step, s, x_1..x_d.
void write_csv(const PathEnsemble& ensemble, const std::string& filename);

/// Binary dump with header {magic "DLAB", version, M, n_steps, d, seed}.
void write_binary(const PathEnsemble& ensemble, const std::string& filename);
PathEnsemble read_binary(const std::string& filename);

}  // namespace dlab
