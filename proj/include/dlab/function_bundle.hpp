#pragma once

#include <Eigen/Core>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dlab/time_grid.hpp"

namespace dlab {

/// Regularity classes of a candidate f(s,x). C02ac is C^2 in space and
/// absolutely continuous in time with the L^1/uniformity conditions on the
/// derivatives; C02acCount relaxes the a.e.-continuity of the second space
/// derivatives in time to countably many discontinuities.
enum class RegClass { C0, C01, C02ac, C02acCount, C12 };

std::string to_string(RegClass c);

/// Candidate test function with evaluators for the derivatives the class
/// promises. Callbacks must be pure; bundles are immutable once built and
/// safe to share across threads.
struct FunctionBundle {
  int dim{1};
  RegClass reg_class{RegClass::C0};
  int growth_degree{2};
  std::vector<double> time_discontinuities;  // declared jump sites of ds_f

  std::function<double(double, const Eigen::VectorXd&)> f;
  std::function<double(double, const Eigen::VectorXd&)> ds_f;
  std::function<Eigen::RowVectorXd(double, const Eigen::VectorXd&)> dx_f;
  std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&)> dxx_f;

  bool has_time_derivative() const { return static_cast<bool>(ds_f); }
  bool has_gradient() const { return static_cast<bool>(dx_f); }
  bool has_hessian() const { return static_cast<bool>(dxx_f); }

  /// Throws UnsupportedError unless all derivative callbacks are present.
  void require_second_order(const char* who) const;
  void require_gradient(const char* who) const;
  /// Throws std::invalid_argument when declared class and callbacks disagree.
  void validate() const;
};

/// Built-in bundles with analytically exact derivatives.
/// Names: quadratic, linear, kink_time_quadratic, separable, heat_solution,
/// ou_solution, custom (programmatic only).
FunctionBundle catalog(const std::string& name,
                       const std::map<std::string, double>& params = {});

/// Axis-aligned box.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  int dim() const { return static_cast<int>(lo.size()); }
  double diameter() const { return (hi - lo).norm(); }
  static Box centered(int dim, double half_width);
};

/// Empirical modulus of continuity: running max of |fn(x)-fn(y)| over a
/// low-discrepancy pool of pairs filtered to |x-y| <= delta. The nested
/// filter makes the result nondecreasing in delta for a fixed pool.
double modulus(const std::function<double(const Eigen::VectorXd&)>& fn, const Box& K,
               double delta, int samples = 4096);

struct RegularityReport {
  double l1_time_bound{0.0};          // int sup_K |ds_f| ds
  double space_uniformity_defect{0.0};// sup_s modulus of second derivatives
  std::vector<double> time_jump_sites;

  bool item_space_c2{false};          // finite second derivatives on samples
  bool item_time_ac{false};           // ds_f integrable on sampled times
  bool item_l1_bound{false};
  bool item_space_uniform{false};
  bool item_time_jumps{false};        // no undeclared jump sites found

  bool pass{false};
  double witness_time{0.0};
  Eigen::VectorXd witness_point;
  std::string witness_item;
};

/// Falsification-style spot check of the C02ac membership conditions on
/// [t0,T] x K: certifies a violation witness, otherwise reports "no
/// violation found at this resolution".
RegularityReport check_c02ac(const FunctionBundle& bundle, const TimeGrid& grid,
                             const Box& K, int samples, double tol);

}  // namespace dlab
