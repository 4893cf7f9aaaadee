#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "dlab/function_bundle.hpp"
#include "dlab/pde_mild.hpp"
#include "dlab/time_grid.hpp"

namespace dlab {

using ScalarField = std::function<double(double, const Eigen::VectorXd&)>;

/// h times the product quintic-smoothstep cutoff: 1 on [-n,n]^d, 0 outside
/// [-(n+1), n+1]^d, C^2 monotone per coordinate.
ScalarField truncate(const ScalarField& h, int n);

/// Space-only convolution with the scaled standard bump
/// phi(xi) ~ exp(-1/(1-|xi|^2)) on |xi| < 1:
/// (h * phi_n)(s, y) = int phi(xi) h(s, y - xi/n) dxi.
/// Quadrature: tensor Gauss rule, order 16 per axis for dim <= 2;
/// quasi-random nodes for higher dimensions.
ScalarField mollify(const ScalarField& h, int n, int dim);

/// Component `comp` of the spatial gradient of the mollified field,
/// n * int d_comp(phi)(xi) h(s, y - xi/n) dxi. Defined even when h itself
/// is not differentiable.
ScalarField mollify_grad(const ScalarField& h, int n, int dim, int comp);

struct EvalGrid {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> points;
};

/// Approximating data of a quasi-strong solution: smoothed sources h_n,
/// their mild solutions u_n on the evaluation grid, and the reference mild
/// solution of the original source.
struct ApproxSequence {
  std::vector<int> indices;
  std::vector<ScalarField> h_n;
  std::vector<Eigen::MatrixXd> u_n;  // times x points
  Eigen::MatrixXd u_ref;
  EvalGrid eval;

  bool has_gradients{false};
  std::vector<Eigen::MatrixXd> grad_n;  // d=1 surfaces, times x points
  Eigen::MatrixXd grad_ref;
};

/// For each n: h_n = mollify(truncate(h, n), n), u_n = mild solve with
/// source h_n and g = 0 on the evaluation grid. One noise ensemble drives
/// every n and the reference, so differences are free of independent MC
/// noise. Requires g == 0 (spot-checked); the g != 0 case reduces by
/// linearity through the fixed terminal term.
ApproxSequence build_sequence(const CauchyProblem& prob, const std::vector<int>& indices,
                              const Box& K, const EvalGrid& eval, const McConfig& mc,
                              bool with_gradients = false);

struct ConvergenceReport {
  std::vector<int> indices;
  std::vector<double> sup_u_err;  // sup over the eval grid of |u_n - u|
  std::vector<double> l1_h_err;   // int_t^T sup_K |h_n - h| ds
  bool pass{false};
  double trend_u{0.0};  // fitted decay exponent in n
  double trend_h{0.0};
  double tol_u{0.0};
  double tol_h{0.0};
};

/// Error sequences on the discrete grid; pass iff both are eventually
/// decreasing and their final values meet the tolerances.
ConvergenceReport convergence_report(const ApproxSequence& seq, const ScalarField& h,
                                     const Box& K, const TimeGrid& time_grid, double tol_u,
                                     double tol_h);

void write_ladder_csv(const ConvergenceReport& rep, const std::string& filename);

}  // namespace dlab
