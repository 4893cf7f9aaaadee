#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <vector>

#include "dlab/sample_path.hpp"
#include "dlab/time_grid.hpp"

namespace dlab {

/// Read-only view of a path up to a cutoff step. Drift callbacks receive
/// this so history-dependent (progressively measurable) drifts can only
/// read values at times <= s.
class HistoryView {
 public:
  HistoryView(const SamplePath& path, std::int64_t upto) : path_(&path), upto_(upto) {}

  std::int64_t current_step() const { return upto_; }
  double time() const { return path_->grid().time_at(upto_); }

  /// State at step k, clamped to [0, current_step].
  Eigen::RowVectorXd state(std::int64_t k) const {
    return path_->state_extended(std::min(k, upto_));
  }

  const TimeGrid& grid() const { return path_->grid(); }

 private:
  const SamplePath* path_;
  std::int64_t upto_;
};

using DriftFn =
    std::function<Eigen::VectorXd(double s, const Eigen::VectorXd& x, const HistoryView&)>;
using DiffusionFn = std::function<Eigen::MatrixXd(double s, const Eigen::VectorXd& x)>;

struct SdeSpec {
  int state_dim{1};
  int noise_dim{1};
  DriftFn drift;          // -> state_dim vector
  DiffusionFn diffusion;  // -> state_dim x noise_dim matrix

  // Optional spatial derivatives, needed by first_variation:
  // drift_jacobian(s,x)(i,l)        = d b_i / d x_l
  // diffusion_jacobian(s,x)[l](i,j) = d sigma_ij / d x_l
  std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&)> drift_jacobian;
  std::function<std::vector<Eigen::MatrixXd>(double, const Eigen::VectorXd&)> diffusion_jacobian;

  /// Spec from plain (s,x) coefficient fields.
  static SdeSpec from_fields(
      int state_dim, int noise_dim,
      std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)> b,
      DiffusionFn sigma);
};

/// Explicit Euler scheme driven by the supplied noise, so the same W can
/// drive a process, its first variation and integral estimators.
PathEnsemble euler_maruyama(const TimeGrid& grid, const SdeSpec& sde,
                            const Eigen::VectorXd& x0, const PathEnsemble& noise);

SamplePath euler_maruyama_path(const TimeGrid& grid, const SdeSpec& sde,
                               const Eigen::VectorXd& x0, const SamplePath& noise,
                               std::int64_t path_index = 0);

/// First variation Z = dX/dx0 along a realized path: solves the linearized
/// SDE dZ = (d_x b) Z ds + sum_j (d_x sigma_.j) Z dW^j with Z_t0 = I on the
/// same grid and noise. Returns a path of dimension d*d (row-major blocks);
/// scalar problems yield a scalar path.
SamplePath first_variation(const TimeGrid& grid, const SdeSpec& sde,
                           const SamplePath& x_path, const SamplePath& noise);

}  // namespace dlab
