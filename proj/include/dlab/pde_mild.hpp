#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dlab/function_bundle.hpp"
#include "dlab/sde.hpp"
#include "dlab/time_grid.hpp"

namespace dlab {

/// Backward parabolic data: generator coefficients sigma, b, source h and
/// terminal condition g on [0, terminal_time].
///
/// Sign convention. The solver realizes u(s,x) = P_{s,T} g(x) -
/// int_s^T P_{s,r} h(r,.)(x) dr, the representation consistent with the
/// integrated form u(s,x) = g(x) - int_s^T h + int_s^T A_r u and with
/// L_0 u = h. See README for the discussion of the two sign variants.
struct CauchyProblem {
  int state_dim{1};
  int noise_dim{1};
  double terminal_time{1.0};
  int growth_degree{2};
  bool nondegenerate{false};
  double nondeg_constant{0.0};

  std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&)> sigma;
  std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)> b;
  std::function<double(double, const Eigen::VectorXd&)> h;
  std::function<double(const Eigen::VectorXd&)> g;

  // Optional derivatives for the pathwise gradient representation.
  std::function<Eigen::RowVectorXd(const Eigen::VectorXd&)> dg;
  std::function<Eigen::RowVectorXd(double, const Eigen::VectorXd&)> dh;
  std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&)> db;
  std::function<std::vector<Eigen::MatrixXd>(double, const Eigen::VectorXd&)> dsigma;

  SdeSpec to_sde() const;
  bool has_gradient_data() const;
  void validate() const;

  /// Spot check of the non-degeneracy bound xi' sigma sigma' xi >= c|xi|^2
  /// on random (s,x,xi) draws; returns the worst observed ratio.
  double nondegeneracy_margin(std::uint64_t seed = 7, int draws = 256) const;
};

/// Built-in problems: heat_quadratic (sigma=1, b=0, h=0, g=x^2),
/// constant_source (sigma=1, b=0, h=1, g=0), ou_linear (sigma=1, b=-kx, g=x).
CauchyProblem make_problem(const std::string& name,
                           const std::map<std::string, double>& params = {});

struct McConfig {
  std::int64_t n_paths{256};
  std::int64_t n_steps{256};
  std::uint64_t seed{1};
  bool antithetic{false};

  void validate() const;
};

struct Estimate {
  double value{0.0};
  double std_error{0.0};
  std::int64_t n_paths{0};
};

/// A_s f(x) = dx_f . b + (1/2) Tr(sigma' dxx_f sigma).
double apply_generator(const FunctionBundle& bundle, const CauchyProblem& prob, double s,
                       const Eigen::VectorXd& x);

/// Sup over grid times of the integrated-identity defect
/// |u(s,x) - g(x) + int_s^T h(r,x) dr - int_s^T (A_r u)(r,x) dr|
/// with trapezoidal quadrature at fixed x.
double quasi_strict_residual(const FunctionBundle& bundle, const CauchyProblem& prob,
                             const Eigen::VectorXd& x, const TimeGrid& grid);

/// Feynman-Kac estimate of the mild solution at (s,x): Euler paths from
/// (s,x), sample mean of g(X_T) - int_s^T h(r,X_r) dr.
Estimate mild_solve(const CauchyProblem& prob, double s, const Eigen::VectorXd& x,
                    const McConfig& mc);

/// Pathwise gradient: joint (Y,Z) simulation, sample mean of
/// dg(Y_T) Z_T - int_s^T dh(r,Y_r) Z_r dr, one estimate per component.
std::vector<Estimate> mild_grad(const CauchyProblem& prob, double s,
                                const Eigen::VectorXd& x, const McConfig& mc);

/// Closed forms used by the acceptance suite:
/// heat_quadratic, constant_source, ou_linear.
double oracle_solution(const std::string& name, const std::map<std::string, double>& params,
                       double s, const Eigen::VectorXd& x);

struct MomentReport {
  int p{2};
  std::vector<double> x_values;
  std::vector<double> sup_moments;  // sup over grid times of mean |X_s|^p
  double fitted_c{0.0};             // max ratio against 1+|x|^p
  double fitted_slope{0.0};         // LS slope of sup_moment vs |x|^p
};

/// Growth check behind the moment bound sup_s E|X_s|^p <= C (1+|x|^p).
MomentReport polynomial_moment_check(const CauchyProblem& prob, int p, const McConfig& mc,
                                     const std::vector<double>& x_probes = {0, 1, 2, 4, 8});

}  // namespace dlab
