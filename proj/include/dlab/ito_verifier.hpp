#pragma once

#include <optional>

#include "dlab/function_bundle.hpp"
#include "dlab/regularization.hpp"
#include "dlab/sample_path.hpp"

namespace dlab {

/// Which hypothesis of the generalized Ito formula the caller asserts for
/// the input pair (f, X): countable time discontinuities of the second
/// space derivatives, or absolutely continuous mutual covariations of X.
enum class ItoHypothesis { CountableTimeJumps, AbsContCovariation };

/// Term-by-term expansion of f(s,X_s) - f(t,X_t) at one regularization
/// width. The residual collects what the formula claims vanishes as
/// eps -> 0; i1/i3/i4 mirror the proof's intermediate terms and are
/// diagnostics only.
struct ItoBreakdown {
  SamplePath lhs;           // exact evaluation, no quadrature error
  SamplePath time_term;     // left-point quadrature of ds_f(r, X_r)
  SamplePath forward_term;  // forward_integral_eps of dx_f(., X) against X
  SamplePath bracket_term;  // (1/2) Stieltjes of dxx_f against the eps-bracket
  SamplePath residual;      // lhs - (time + forward + bracket)
  std::optional<SamplePath> i1, i3, i4;
  ItoHypothesis hypothesis{ItoHypothesis::AbsContCovariation};
  int eps_mult{0};
};

ItoBreakdown ito_terms(const FunctionBundle& bundle, const SamplePath& X, int eps_mult,
                       ItoHypothesis hypothesis = ItoHypothesis::AbsContCovariation,
                       bool with_diagnostics = false);

/// Ensemble statistic: mean over paths of sup_s |residual(s)| per epsilon,
/// diagnosed over the schedule. Converged means the formula is numerically
/// validated at tol.
LimitReport ito_residual(const FunctionBundle& bundle, const PathEnsemble& ensemble,
                         const EpsSchedule& schedule, double tol,
                         ItoHypothesis hypothesis = ItoHypothesis::AbsContCovariation);

/// Both sides of the absolutely-continuous decomposition identity for a
/// weak Dirichlet input X = M + A: the left side splits off the martingale
/// Ito sum, the right side is time quadrature + bracket of M + forward
/// integral against A. Reports the ensemble mean sup-difference per epsilon.
LimitReport fukushima_ac_identity(const FunctionBundle& bundle, const PathEnsemble& X,
                                  const PathEnsemble& M, const PathEnsemble& A,
                                  const EpsSchedule& schedule, double tol);

/// CSV rows (eps, path_id, sup_residual) for one ensemble-level run.
void write_ito_csv(const std::vector<int>& eps_multiples,
                   const std::vector<std::vector<double>>& sup_residuals,
                   double dt, const std::string& filename);

}  // namespace dlab
