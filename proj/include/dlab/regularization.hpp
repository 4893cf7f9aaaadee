#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "dlab/sample_path.hpp"
#include "dlab/time_grid.hpp"

namespace dlab {

/// Regularization widths as integer multiples of dt, strictly decreasing.
struct EpsSchedule {
  std::vector<int> multiples;

  explicit EpsSchedule(std::vector<int> m);
  static EpsSchedule default_schedule() { return EpsSchedule({64, 32, 16, 8, 4}); }

  int smallest() const { return multiples.back(); }
  int largest() const { return multiples.front(); }
  std::size_t size() const { return multiples.size(); }
};

/// Matrix-valued bracket path, symmetric in the component indices.
class BracketPath {
 public:
  BracketPath(TimeGrid grid, int dim);

  const TimeGrid& grid() const { return grid_; }
  int dim() const { return dim_; }

  double entry(std::int64_t step, int i, int j) const { return flat_(step, i * dim_ + j); }
  double& entry(std::int64_t step, int i, int j) { return flat_(step, i * dim_ + j); }

  /// Scalar bracket path; valid for dim == 1.
  double scalar(std::int64_t step) const { return flat_(step, 0); }

  const Eigen::MatrixXd& flat() const { return flat_; }

 private:
  TimeGrid grid_;
  int dim_;
  Eigen::MatrixXd flat_;  // (n_steps+1) x dim^2
};

/// Epsilon-regularized forward integral: left-endpoint Riemann sum of
/// (1/eps) int Y_r . (X_{r+eps} - X_r) dr with the constant extension of X
/// past T. Output is a scalar path starting at 0.
SamplePath forward_integral_eps(const SamplePath& Y, const SamplePath& X, int eps_mult);

/// Epsilon-regularized covariation: each entry (i,j) accumulates the
/// symmetrized product of shifted increments,
/// (1/eps) int (X^i_{r+eps}-X^i_r)(Y^j_{r+eps}-Y^j_r) dr.
BracketPath bracket_eps(const SamplePath& X, const SamplePath& Y, int eps_mult);

/// Left-point non-anticipating Ito sum: cumulated Y(s_k).(X_{k+1}-X_k).
/// Semimartingale oracle for the forward integral.
SamplePath ito_integral(const SamplePath& Y, const SamplePath& X);

/// Convergence diagnosis of a parameter-indexed family of estimates.
struct LimitReport {
  std::string param_label{"eps"};
  std::vector<double> params;     // strictly decreasing
  std::vector<double> estimates;  // aligned with params

  double limit{0.0};    // smallest-parameter estimate, Richardson-corrected on demand
  double rate{0.0};     // power-law exponent fitted on successive differences
  double spread{0.0};   // successive difference at the finest parameter pair
  bool monotone{false}; // successive differences non-increasing
  bool converged{false};
  double tol{0.0};
  bool richardson{false};

  // Optional per-parameter ensemble paths for CSV emission (mean, stderr).
  std::vector<std::vector<double>> per_param_path;
  std::vector<std::vector<double>> per_param_stderr;
  std::vector<double> path_times;
};

/// Analyze precomputed estimates over a decreasing parameter list.
LimitReport analyze_limit(const std::vector<double>& params,
                          const std::vector<double>& estimates, double tol,
                          bool richardson = false);

/// Evaluate `estimator` over the schedule (param = multiple * dt) and analyze.
LimitReport limit_estimate(const std::function<double(int eps_mult)>& estimator,
                           const EpsSchedule& schedule, double dt, double tol,
                           bool richardson = false);

/// CSV rows (eps, s, estimate, stderr); uses per-parameter paths when
/// present, otherwise one terminal row per parameter.
void write_limit_csv(const LimitReport& report, const std::string& filename);

}  // namespace dlab
