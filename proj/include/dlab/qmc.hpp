#pragma once

#include <Eigen/Core>
#include <cmath>

namespace dlab::qmc {

/// Additive-recurrence low-discrepancy sequence in [0,1)^d (Roberts' R_d,
/// built on the generalized golden ratio).
class RSequence {
 public:
  explicit RSequence(int dim, double seed_point = 0.5) : alpha_(dim), state_(dim) {
    // x solves x^{d+1} = x + 1
    double phi = 2.0;
    for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (dim + 1));
    double a = 1.0;
    for (int c = 0; c < dim; ++c) {
      a /= phi;
      alpha_[c] = a;
      state_[c] = seed_point;
    }
  }

  Eigen::VectorXd next() {
    for (int c = 0; c < state_.size(); ++c) {
      state_[c] += alpha_[c];
      state_[c] -= std::floor(state_[c]);
    }
    return state_;
  }

 private:
  Eigen::VectorXd alpha_;
  Eigen::VectorXd state_;
};

}  // namespace dlab::qmc
