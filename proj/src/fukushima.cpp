#include "dlab/fukushima.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dlab/errors.hpp"
#include "dlab/parallel.hpp"

namespace dlab {

namespace {

void check_scalar_u(const FunctionBundle& u, const SamplePath& S, const char* who) {
  u.require_gradient(who);
  if (u.dim != S.dim()) {
    throw std::invalid_argument(std::string(who) + ": bundle and path dimensions differ");
  }
}

SamplePath coarsen(const SamplePath& p, int stride) {
  const auto n = p.n_steps();
  if (stride < 1 || n % stride != 0) {
    throw std::invalid_argument("chain_rule_check: coarsening stride must divide n_steps");
  }
  const TimeGrid g = make_grid(p.grid().t0, p.grid().T, n / stride);
  Eigen::MatrixXd vals(g.n_steps + 1, p.dim());
  for (std::int64_t k = 0; k <= g.n_steps; ++k) {
    vals.row(k) = p.values().row(k * stride);
  }
  return SamplePath(g, std::move(vals));
}

}  // namespace

Decomposition split(const FunctionBundle& u, const SamplePath& S, const SamplePath& W,
                    const DiffusionFn& sigma) {
  check_scalar_u(u, S, "split");
  if (!(S.grid() == W.grid())) {
    throw std::invalid_argument("split: S and W must share the grid");
  }
  const TimeGrid& g = S.grid();
  const auto n = g.n_steps;

  Decomposition out;
  out.mart_part = SamplePath(g, 1);
  out.ortho_part = SamplePath(g, 1);

  const double u0 = u.f(g.t0, S.values().row(0).transpose());
  double mart = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    const double s = g.time_at(k);
    const Eigen::VectorXd x = S.values().row(k).transpose();
    const Eigen::RowVectorXd grad = u.dx_f(s, x);
    const Eigen::VectorXd dw = (W.values().row(k + 1) - W.values().row(k)).transpose();
    mart += grad * sigma(s, x) * dw;
    out.mart_part.at(k + 1) = mart;
    out.ortho_part.at(k + 1) =
        u.f(g.time_at(k + 1), S.values().row(k + 1).transpose()) - u0 - mart;
  }
  out.closure_residual = 0.0;
  return out;
}

DriftField drift_field_from(std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)> f) {
  return [f = std::move(f)](double s, const Eigen::VectorXd& x, const HistoryView&) {
    return f(s, x);
  };
}

SamplePath ortho_formula(const FunctionBundle& u, const CauchyProblem& prob,
                         const SamplePath& S, const DriftField& drift_f) {
  check_scalar_u(u, S, "ortho_formula");
  const TimeGrid& g = S.grid();
  SamplePath out(g, 1);
  double acc = 0.0;
  for (std::int64_t k = 0; k < g.n_steps; ++k) {
    const double s = g.time_at(k);
    const Eigen::VectorXd x = S.values().row(k).transpose();
    const Eigen::RowVectorXd grad = u.dx_f(s, x);
    const HistoryView history(S, k);
    acc += (prob.h(s, x) + grad.dot(drift_f(s, x, history)) - grad.dot(prob.b(s, x))) * g.dt;
    out.at(k + 1) = acc;
  }
  return out;
}

SamplePath ortho_formula_rep(const FunctionBundle& u, const CauchyProblem& prob,
                             const SamplePath& S, const SamplePath& A, AIntegralRoute route,
                             int eps_mult) {
  check_scalar_u(u, S, "ortho_formula_rep");
  if (!(S.grid() == A.grid()) || S.dim() != A.dim()) {
    throw std::invalid_argument("ortho_formula_rep: S and A must share grid and dim");
  }
  const TimeGrid& g = S.grid();
  const int d = S.dim();

  SamplePath grad_path(g, d);
  for (std::int64_t k = 0; k <= g.n_steps; ++k) {
    grad_path.values().row(k) = u.dx_f(g.time_at(k), S.values().row(k).transpose());
  }

  SamplePath middle(g, 1);
  if (route == AIntegralRoute::ForwardEps) {
    if (eps_mult < 1) {
      throw std::invalid_argument("ortho_formula_rep: forward route needs eps_mult >= 1");
    }
    middle = forward_integral_eps(grad_path, A, eps_mult);
  } else {
    double acc = 0.0;
    for (std::int64_t k = 0; k < g.n_steps; ++k) {
      acc += grad_path.values().row(k).dot(A.values().row(k + 1) - A.values().row(k));
      middle.at(k + 1) = acc;
    }
  }

  SamplePath out(g, 1);
  double acc = 0.0;
  for (std::int64_t k = 0; k < g.n_steps; ++k) {
    const double s = g.time_at(k);
    const Eigen::VectorXd x = S.values().row(k).transpose();
    acc += (prob.h(s, x) - grad_path.values().row(k).dot(prob.b(s, x))) * g.dt;
    out.at(k + 1) = acc + middle.at(k + 1);
  }
  return out;
}

LimitReport chain_rule_check(const FunctionBundle& u, const CauchyProblem& prob,
                             const PathEnsemble& S, const DriftField& drift_f,
                             const PathEnsemble& W, const EpsSchedule& coarsening,
                             double tol) {
  S.validate();
  W.validate();
  if (S.size() != W.size() || !(S.grid() == W.grid())) {
    throw std::invalid_argument("chain_rule_check: S and W must pair up");
  }

  const auto m = S.size();
  std::vector<double> params, estimates;
  for (int stride : coarsening.multiples) {
    std::vector<double> sups(m);
    parallel_for(m, [&](std::int64_t i) {
      const SamplePath sc = coarsen(S.paths[i], stride);
      const SamplePath wc = coarsen(W.paths[i], stride);
      const Decomposition dec = split(u, sc, wc, prob.sigma);
      const SamplePath formula = ortho_formula(u, prob, sc, drift_f);
      sups[i] = (dec.ortho_part.values() - formula.values()).cwiseAbs().maxCoeff();
    });
    double mean = 0.0;
    for (double v : sups) mean += v;
    params.push_back(stride * S.grid().dt);
    estimates.push_back(mean / static_cast<double>(m));
  }
  LimitReport rep = analyze_limit(params, estimates, tol);
  rep.param_label = "dt_eff";
  return rep;
}

OrthoReport orthogonality_test(const PathEnsemble& A,
                               const std::vector<std::pair<std::string, PathEnsemble>>& battery,
                               const EpsSchedule& schedule, double threshold) {
  if (battery.empty()) throw std::invalid_argument("orthogonality_test: empty battery");
  A.validate();
  if (A.dim() != 1) {
    throw std::invalid_argument("orthogonality_test: A must be scalar in v1");
  }

  OrthoReport rep;
  rep.threshold = threshold;
  rep.pass = true;
  const auto m = A.size();

  for (const auto& [label, N] : battery) {
    N.validate();
    if (N.size() != m || !(N.grid() == A.grid()) || N.dim() != 1) {
      throw std::invalid_argument("orthogonality_test: battery member '" + label +
                                  "' does not match A");
    }
    OrthoReport::Entry entry;
    entry.label = label;
    for (int mult : schedule.multiples) {
      std::vector<double> maxima(m);
      parallel_for(m, [&](std::int64_t i) {
        const BracketPath b = bracket_eps(A.paths[i], N.paths[i], mult);
        maxima[i] = b.flat().cwiseAbs().maxCoeff();
      });
      double mean = 0.0;
      for (double v : maxima) mean += v;
      entry.per_eps.push_back(mean / static_cast<double>(m));
    }
    entry.stat = entry.per_eps.back();
    entry.decays = entry.per_eps.back() <= 0.5 * entry.per_eps.front();
    rep.pass = rep.pass && entry.stat <= threshold && entry.decays;
    rep.entries.push_back(std::move(entry));
  }
  return rep;
}

std::vector<std::pair<std::string, PathEnsemble>> default_battery(const PathEnsemble& W) {
  W.validate();
  const TimeGrid& g = W.grid();
  std::vector<std::pair<std::string, PathEnsemble>> battery;

  for (int c = 0; c < W.dim(); ++c) {
    PathEnsemble comp;
    comp.seed = W.seed;
    comp.label = "W_" + std::to_string(c + 1);
    PathEnsemble quad;
    quad.seed = W.seed;
    quad.label = "W_" + std::to_string(c + 1) + "^2-t";
    for (const auto& p : W.paths) {
      SamplePath pc(g, 1);
      pc.values().col(0) = p.values().col(c);
      SamplePath pq(g, 1);
      for (std::int64_t k = 0; k <= g.n_steps; ++k) {
        pq.at(k) = p.at(k, c) * p.at(k, c) - (g.time_at(k) - g.t0);
      }
      comp.paths.push_back(std::move(pc));
      quad.paths.push_back(std::move(pq));
    }
    battery.emplace_back(comp.label, std::move(comp));
    battery.emplace_back(quad.label, std::move(quad));
  }

  PathEnsemble sine;
  sine.seed = W.seed;
  sine.label = "int_sin(W)dW";
  for (const auto& p : W.paths) {
    SamplePath si(g, 1);
    double acc = 0.0;
    for (std::int64_t k = 0; k < g.n_steps; ++k) {
      acc += std::sin(p.at(k, 0)) * (p.at(k + 1, 0) - p.at(k, 0));
      si.at(k + 1) = acc;
    }
    sine.paths.push_back(std::move(si));
  }
  battery.emplace_back(sine.label, std::move(sine));
  return battery;
}

GirsanovReport girsanov_weight(const FunctionBundle& u, const CauchyProblem& prob,
                               const PathEnsemble& S, const PathEnsemble& W,
                               const DriftField& drift_f) {
  S.validate();
  W.validate();
  if (S.size() != W.size() || !(S.grid() == W.grid())) {
    throw std::invalid_argument("girsanov_weight: S and W must pair up");
  }
  u.require_gradient("girsanov_weight");

  const TimeGrid& g = S.grid();
  const auto n = g.n_steps;
  const auto m = S.size();
  const int d = S.dim();

  struct PerPath {
    double z_T, novikov, eta_max, route1, r_T, l21;
  };
  std::vector<PerPath> rows(m);

  parallel_for(m, [&](std::int64_t i) {
    const SamplePath& sp = S.paths[i];
    const SamplePath& wp = W.paths[i];
    double log_z = 0.0, eta_sq_int = 0.0, eta_max = 0.0;
    double mart = 0.0, h_int = 0.0, b1 = 0.0, l21 = 0.0;
    for (std::int64_t k = 0; k < n; ++k) {
      const double s = g.time_at(k);
      const Eigen::VectorXd x = sp.values().row(k).transpose();
      const Eigen::MatrixXd sv = prob.sigma(s, x);
      const Eigen::MatrixXd gram = sv * sv.transpose();
      const Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
      if (!lu.isInvertible()) {
        throw NumericalError("girsanov_weight: singular sigma sigma^T (path " +
                             std::to_string(i) + ", step " + std::to_string(k) + ")");
      }
      const Eigen::MatrixXd pinv = sv.transpose() * lu.inverse();  // right pseudo-inverse
      const HistoryView history(sp, k);
      const Eigen::VectorXd fv = drift_f(s, x, history);
      const Eigen::VectorXd eta = pinv * (prob.b(s, x) - fv);
      const Eigen::VectorXd dw = (wp.values().row(k + 1) - wp.values().row(k)).transpose();
      log_z += eta.dot(dw) - 0.5 * eta.squaredNorm() * g.dt;
      eta_sq_int += eta.squaredNorm() * g.dt;
      eta_max = std::max(eta_max, eta.norm());

      const Eigen::RowVectorXd grad = u.dx_f(s, x);
      mart += grad * sv * dw;
      h_int += prob.h(s, x) * g.dt;
      b1 += (prob.h(s, x) + grad.dot(fv) - grad.dot(prob.b(s, x))) * g.dt;
      l21 += grad.squaredNorm() * g.dt;
    }
    const double u_incr = u.f(g.T, sp.values().row(n).transpose()) -
                          u.f(g.t0, sp.values().row(0).transpose());
    rows[i] = PerPath{std::exp(log_z), std::exp(0.5 * eta_sq_int), eta_max,
                      u_incr - b1, u_incr - h_int, l21};
  });

  GirsanovReport rep;
  double z_sum = 0, z_sq = 0, nov = 0, r1 = 0, r1_sq = 0, r2 = 0, r2_sq = 0;
  for (const auto& r : rows) {
    z_sum += r.z_T;
    z_sq += r.z_T * r.z_T;
    nov += r.novikov;
    rep.eta_max = std::max(rep.eta_max, r.eta_max);
    r1 += r.route1;
    r1_sq += r.route1 * r.route1;
    const double w = r.z_T * r.r_T;
    r2 += w;
    r2_sq += w * w;
    rep.l21_max = std::max(rep.l21_max, r.l21);
  }
  const auto md = static_cast<double>(m);
  auto finish = [md](double sum, double sum_sq, std::int64_t m_paths) {
    Estimate e;
    e.n_paths = m_paths;
    e.value = sum / md;
    e.std_error = std::sqrt(std::max(0.0, (sum_sq - sum * sum / md) / (md - 1.0)) / md);
    return e;
  };
  rep.z_terminal_mean = finish(z_sum, z_sq, m);
  rep.novikov_exponent_mean = nov / md;
  rep.route_direct = finish(r1, r1_sq, m);
  rep.route_girsanov = finish(r2, r2_sq, m);
  rep.reweighted_check = std::abs(rep.route_girsanov.value);
  rep.reweighted_std_error = rep.route_girsanov.std_error;
  rep.l21_warning = rep.l21_max > 1e6;
  return rep;
}

namespace {

// Bilinear interpolation on a (times x points) surface with flat
// extension outside the rectangle.
double interp_surface(const std::vector<double>& times, const std::vector<double>& xs,
                      const Eigen::MatrixXd& surface, double t, double x) {
  const auto bracket1 = [](const std::vector<double>& v, double q, std::size_t& lo,
                           double& frac) {
    if (q <= v.front()) {
      lo = 0;
      frac = 0.0;
      return;
    }
    if (q >= v.back()) {
      lo = v.size() - 2;
      frac = 1.0;
      return;
    }
    lo = static_cast<std::size_t>(
             std::upper_bound(v.begin(), v.end(), q) - v.begin()) - 1;
    lo = std::min(lo, v.size() - 2);
    frac = (q - v[lo]) / (v[lo + 1] - v[lo]);
  };
  std::size_t ti = 0, xi = 0;
  double ft = 0.0, fx = 0.0;
  if (times.size() == 1) {
    ft = 0.0;
  } else {
    bracket1(times, t, ti, ft);
  }
  bracket1(xs, x, xi, fx);
  const auto at = [&](std::size_t a, std::size_t b) { return surface(a, b); };
  if (times.size() == 1) {
    return (1 - fx) * at(0, xi) + fx * at(0, xi + 1);
  }
  return (1 - ft) * ((1 - fx) * at(ti, xi) + fx * at(ti, xi + 1)) +
         ft * ((1 - fx) * at(ti + 1, xi) + fx * at(ti + 1, xi + 1));
}

}  // namespace

LimitReport condition16_check(const ApproxSequence& seq, const CauchyProblem& prob,
                              const PathEnsemble& S, const DriftField& drift_f, double tol) {
  if (!seq.has_gradients) {
    throw UnsupportedError("condition16_check: sequence carries no gradient surfaces");
  }
  S.validate();
  if (S.dim() != 1) {
    throw UnsupportedError("condition16_check: one-dimensional in v1");
  }
  if (seq.eval.points.size() < 2) {
    throw std::invalid_argument("condition16_check: needs at least two space points");
  }

  std::vector<double> xs;
  for (const auto& p : seq.eval.points) xs.push_back(p[0]);
  if (!std::is_sorted(xs.begin(), xs.end())) {
    throw std::invalid_argument("condition16_check: eval points must be sorted");
  }

  const TimeGrid& g = S.grid();
  const auto m = S.size();
  std::vector<double> params, estimates;
  for (std::size_t idx = 0; idx < seq.indices.size(); ++idx) {
    std::vector<double> sups(m);
    parallel_for(m, [&](std::int64_t i) {
      const SamplePath& sp = S.paths[i];
      double acc = 0.0, sup = 0.0;
      for (std::int64_t k = 0; k < g.n_steps; ++k) {
        const double s = g.time_at(k);
        const Eigen::VectorXd x = sp.values().row(k).transpose();
        const double gn = interp_surface(seq.eval.times, xs, seq.grad_n[idx], s, x[0]);
        const double gr = interp_surface(seq.eval.times, xs, seq.grad_ref, s, x[0]);
        const HistoryView history(sp, k);
        const double fmb = (drift_f(s, x, history) - prob.b(s, x))(0);
        acc += (gn - gr) * fmb * g.dt;
        sup = std::max(sup, std::abs(acc));
      }
      sups[i] = sup;
    });
    double mean = 0.0;
    for (double v : sups) mean += v;
    params.push_back(1.0 / static_cast<double>(seq.indices[idx]));
    estimates.push_back(mean / static_cast<double>(m));
  }
  // indices ascend, so params already descend
  LimitReport rep = analyze_limit(params, estimates, tol);
  rep.param_label = "1/n";
  return rep;
}

}  // namespace dlab
