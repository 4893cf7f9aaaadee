#include "dlab/ito_verifier.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "dlab/errors.hpp"
#include "dlab/parallel.hpp"

namespace dlab {

ItoBreakdown ito_terms(const FunctionBundle& bundle, const SamplePath& X, int eps_mult,
                       ItoHypothesis hypothesis, bool with_diagnostics) {
  bundle.require_second_order("ito_terms");
  if (bundle.dim != X.dim()) {
    throw std::invalid_argument("ito_terms: bundle and path dimensions differ");
  }
  if (eps_mult < 1) throw std::invalid_argument("ito_terms: eps must be >= dt");

  const TimeGrid& g = X.grid();
  const auto n = g.n_steps;
  const int d = X.dim();

  ItoBreakdown out;
  out.hypothesis = hypothesis;
  out.eps_mult = eps_mult;

  out.lhs = SamplePath(g, 1);
  out.time_term = SamplePath(g, 1);

  const Eigen::VectorXd x0 = X.values().row(0).transpose();
  const double f0 = bundle.f(g.t0, x0);

  SamplePath grad_path(g, d);
  for (std::int64_t k = 0; k <= n; ++k) {
    const double s = g.time_at(k);
    const Eigen::VectorXd x = X.values().row(k).transpose();
    out.lhs.at(k) = bundle.f(s, x) - f0;
    grad_path.values().row(k) = bundle.dx_f(s, x);
  }
  double time_acc = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    time_acc += bundle.ds_f(g.time_at(k), X.values().row(k).transpose()) * g.dt;
    out.time_term.at(k + 1) = time_acc;
  }

  out.forward_term = forward_integral_eps(grad_path, X, eps_mult);

  const BracketPath bracket = bracket_eps(X, X, eps_mult);
  out.bracket_term = SamplePath(g, 1);
  double br_acc = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    const Eigen::MatrixXd hess = bundle.dxx_f(g.time_at(k), X.values().row(k).transpose());
    double incr = 0.0;
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        incr += hess(i, j) * (bracket.entry(k + 1, i, j) - bracket.entry(k, i, j));
      }
    }
    br_acc += 0.5 * incr;
    out.bracket_term.at(k + 1) = br_acc;
  }

  out.residual = SamplePath(g, 1);
  out.residual.values() =
      out.lhs.values() - out.time_term.values() - out.forward_term.values() -
      out.bracket_term.values();

  if (with_diagnostics) {
    // Proof-term diagnostics at the same eps. All three use the constant
    // extension in both the time argument and the path index.
    SamplePath i1(g, 1), i3(g, 1), i4(g, 1);
    const double inv_m = 1.0 / static_cast<double>(eps_mult);
    double a1 = 0.0, a3 = 0.0, a4 = 0.0;
    for (std::int64_t k = 0; k < n; ++k) {
      const std::int64_t kf = std::min<std::int64_t>(k + eps_mult, n);
      const double s = g.time_at(k);
      const double s_shift = std::min(g.time_at(kf), g.T);
      const Eigen::VectorXd x = X.values().row(k).transpose();
      const Eigen::VectorXd x_shift = X.values().row(kf).transpose();
      a1 += (bundle.f(s_shift, x_shift) - bundle.f(s, x_shift)) * inv_m;

      const Eigen::VectorXd dx = x_shift - x;
      const Eigen::MatrixXd hess = bundle.dxx_f(s, x);
      a3 += 0.5 * dx.dot(hess * dx) * inv_m;

      // One-point midpoint rule in the Taylor remainder's inner integral.
      const Eigen::MatrixXd hess_mid = bundle.dxx_f(s, x + 0.5 * dx);
      a4 += 0.5 * dx.dot((hess_mid - hess) * dx) * inv_m;

      i1.at(k + 1) = a1;
      i3.at(k + 1) = a3;
      i4.at(k + 1) = a4;
    }
    out.i1 = std::move(i1);
    out.i3 = std::move(i3);
    out.i4 = std::move(i4);
  }
  return out;
}

namespace {

double sup_abs(const SamplePath& p) {
  return p.values().cwiseAbs().maxCoeff();
}

}  // namespace

LimitReport ito_residual(const FunctionBundle& bundle, const PathEnsemble& ensemble,
                         const EpsSchedule& schedule, double tol,
                         ItoHypothesis hypothesis) {
  ensemble.validate();
  const double dt = ensemble.grid().dt;
  const auto m = ensemble.size();

  std::vector<double> params, estimates;
  for (int mult : schedule.multiples) {
    std::vector<double> sups(m);
    parallel_for(m, [&](std::int64_t i) {
      sups[i] = sup_abs(ito_terms(bundle, ensemble.paths[i], mult, hypothesis).residual);
    });
    double mean = 0.0;
    for (double v : sups) mean += v;
    params.push_back(mult * dt);
    estimates.push_back(mean / static_cast<double>(m));
  }
  return analyze_limit(params, estimates, tol);
}

LimitReport fukushima_ac_identity(const FunctionBundle& bundle, const PathEnsemble& X,
                                  const PathEnsemble& M, const PathEnsemble& A,
                                  const EpsSchedule& schedule, double tol) {
  bundle.require_second_order("fukushima_ac_identity");
  X.validate();
  M.validate();
  A.validate();
  if (X.size() != M.size() || X.size() != A.size() || !(X.grid() == M.grid()) ||
      !(X.grid() == A.grid()) || X.dim() != M.dim() || X.dim() != A.dim()) {
    throw std::invalid_argument("fukushima_ac_identity: X, M, A must match in shape");
  }
  const TimeGrid& g = X.grid();
  double scale = 0.0;
  for (std::int64_t i = 0; i < X.size(); ++i) {
    scale = std::max(scale, X.paths[i].values().cwiseAbs().maxCoeff());
  }
  for (std::int64_t i = 0; i < X.size(); ++i) {
    const double gap = (X.paths[i].values() - M.paths[i].values() - A.paths[i].values())
                           .cwiseAbs()
                           .maxCoeff();
    if (gap > 1e-9 * (1.0 + scale)) {
      throw std::invalid_argument("fukushima_ac_identity: decomposition mismatch, X != M + A");
    }
  }

  const int d = X.dim();
  const auto n = g.n_steps;
  const auto m_paths = X.size();

  std::vector<double> params, estimates;
  for (int mult : schedule.multiples) {
    std::vector<double> sups(m_paths);
    parallel_for(m_paths, [&](std::int64_t p) {
      const SamplePath& xp = X.paths[p];
      const SamplePath& mp = M.paths[p];
      const SamplePath& ap = A.paths[p];

      SamplePath grad_path(g, d);
      for (std::int64_t k = 0; k <= n; ++k) {
        grad_path.values().row(k) =
            bundle.dx_f(g.time_at(k), xp.values().row(k).transpose());
      }

      // Left side: B(f) = f(s,X_s) - f(t,X_t) - int dx_f dM (Ito sum).
      const SamplePath mart = ito_integral(grad_path, mp);

      // Right side: time quadrature + (1/2) Hessian against the bracket of
      // M + forward integral against A, all at the same eps.
      const BracketPath bm = bracket_eps(mp, mp, mult);
      const SamplePath fwd_a = forward_integral_eps(grad_path, ap, mult);

      double sup = 0.0;
      double time_acc = 0.0, br_acc = 0.0;
      const Eigen::VectorXd x0 = xp.values().row(0).transpose();
      const double f0 = bundle.f(g.t0, x0);
      for (std::int64_t k = 0; k < n; ++k) {
        const double s = g.time_at(k);
        const Eigen::VectorXd x = xp.values().row(k).transpose();
        time_acc += bundle.ds_f(s, x) * g.dt;
        const Eigen::MatrixXd hess = bundle.dxx_f(s, x);
        double incr = 0.0;
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j)
            incr += hess(i, j) * (bm.entry(k + 1, i, j) - bm.entry(k, i, j));
        br_acc += 0.5 * incr;

        const double lhs =
            bundle.f(g.time_at(k + 1), xp.values().row(k + 1).transpose()) - f0 -
            mart.at(k + 1);
        const double rhs = time_acc + br_acc + fwd_a.at(k + 1);
        sup = std::max(sup, std::abs(lhs - rhs));
      }
      sups[p] = sup;
    });
    double mean = 0.0;
    for (double v : sups) mean += v;
    params.push_back(mult * g.dt);
    estimates.push_back(mean / static_cast<double>(m_paths));
  }
  return analyze_limit(params, estimates, tol);
}

void write_ito_csv(const std::vector<int>& eps_multiples,
                   const std::vector<std::vector<double>>& sup_residuals, double dt,
                   const std::string& filename) {
  std::ofstream out(filename);
  if (!out) throw NumericalError("write_ito_csv: cannot open " + filename);
  out << "eps,path_id,sup_residual\n";
  char buf[96];
  for (std::size_t e = 0; e < eps_multiples.size(); ++e) {
    for (std::size_t p = 0; p < sup_residuals[e].size(); ++p) {
      std::snprintf(buf, sizeof(buf), "%.17g,%zu,%.17g\n", eps_multiples[e] * dt, p,
                    sup_residuals[e][p]);
      out << buf;
    }
  }
}

}  // namespace dlab
