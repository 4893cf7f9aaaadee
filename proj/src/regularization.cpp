#include "dlab/regularization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "dlab/errors.hpp"

namespace dlab {

EpsSchedule::EpsSchedule(std::vector<int> m) : multiples(std::move(m)) {
  if (multiples.size() < 3) {
    throw std::invalid_argument("EpsSchedule: needs at least 3 entries");
  }
  for (std::size_t i = 0; i + 1 < multiples.size(); ++i) {
    if (multiples[i] <= multiples[i + 1]) {
      throw std::invalid_argument("EpsSchedule: entries must be strictly decreasing");
    }
  }
  if (multiples.back() < 1) {
    throw std::invalid_argument("EpsSchedule: smallest entry must be >= 1");
  }
}

namespace {

void check_pair(const SamplePath& a, const SamplePath& b, const char* who) {
  if (!(a.grid() == b.grid())) {
    throw std::invalid_argument(std::string(who) + ": paths must share the grid");
  }
  if (a.dim() != b.dim()) {
    throw std::invalid_argument(std::string(who) + ": paths must share the dimension");
  }
}

}  // namespace

SamplePath forward_integral_eps(const SamplePath& Y, const SamplePath& X, int eps_mult) {
  check_pair(Y, X, "forward_integral_eps");
  if (eps_mult < 1) throw std::invalid_argument("forward_integral_eps: eps must be >= dt");

  const auto n = X.n_steps();
  const int d = X.dim();
  const auto& xv = X.values();
  const auto& yv = Y.values();

  SamplePath out(X.grid(), 1);
  const double inv_m = 1.0 / static_cast<double>(eps_mult);
  double acc = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    const std::int64_t kf = std::min<std::int64_t>(k + eps_mult, n);
    double dot = 0.0;
    for (int c = 0; c < d; ++c) dot += yv(k, c) * (xv(kf, c) - xv(k, c));
    acc += dot * inv_m;
    out.at(k + 1, 0) = acc;
  }
  return out;
}

BracketPath::BracketPath(TimeGrid grid, int dim)
    : grid_(grid), dim_(dim), flat_(Eigen::MatrixXd::Zero(grid.n_steps + 1, dim * dim)) {}

BracketPath bracket_eps(const SamplePath& X, const SamplePath& Y, int eps_mult) {
  check_pair(X, Y, "bracket_eps");
  if (eps_mult < 1) throw std::invalid_argument("bracket_eps: eps must be >= dt");

  const auto n = X.n_steps();
  const int d = X.dim();
  const auto& xv = X.values();
  const auto& yv = Y.values();

  BracketPath out(X.grid(), d);
  const double inv_m = 1.0 / static_cast<double>(eps_mult);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(d * d);
  for (std::int64_t k = 0; k < n; ++k) {
    const std::int64_t kf = std::min<std::int64_t>(k + eps_mult, n);
    for (int i = 0; i < d; ++i) {
      const double dxi = xv(kf, i) - xv(k, i);
      const double dyi = yv(kf, i) - yv(k, i);
      for (int j = i; j < d; ++j) {
        const double dyj = yv(kf, j) - yv(k, j);
        const double dxj = xv(kf, j) - xv(k, j);
        const double v = 0.5 * (dxi * dyj + dxj * dyi) * inv_m;
        acc[i * d + j] += v;
        if (j != i) acc[j * d + i] += v;
      }
    }
    for (int c = 0; c < d * d; ++c) out.entry(k + 1, c / d, c % d) = acc[c];
  }
  return out;
}

SamplePath ito_integral(const SamplePath& Y, const SamplePath& X) {
  check_pair(Y, X, "ito_integral");
  const auto n = X.n_steps();
  const int d = X.dim();
  const auto& xv = X.values();
  const auto& yv = Y.values();

  SamplePath out(X.grid(), 1);
  double acc = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    double dot = 0.0;
    for (int c = 0; c < d; ++c) dot += yv(k, c) * (xv(k + 1, c) - xv(k, c));
    acc += dot;
    out.at(k + 1, 0) = acc;
  }
  return out;
}

LimitReport analyze_limit(const std::vector<double>& params,
                          const std::vector<double>& estimates, double tol,
                          bool richardson) {
  if (params.size() != estimates.size() || params.size() < 2) {
    throw std::invalid_argument("analyze_limit: needs >= 2 aligned (param, estimate) pairs");
  }
  for (std::size_t i = 0; i + 1 < params.size(); ++i) {
    if (!(params[i] > params[i + 1]) || !(params[i + 1] > 0.0)) {
      throw std::invalid_argument("analyze_limit: params must be positive and decreasing");
    }
  }
  for (double e : estimates) {
    if (!std::isfinite(e)) throw NumericalError("analyze_limit: non-finite estimate");
  }

  LimitReport rep;
  rep.params = params;
  rep.estimates = estimates;
  rep.tol = tol;
  rep.richardson = richardson;

  std::vector<double> diffs(params.size() - 1);
  for (std::size_t i = 0; i + 1 < params.size(); ++i) {
    diffs[i] = std::abs(estimates[i] - estimates[i + 1]);
  }
  rep.spread = diffs.back();
  rep.monotone = true;
  for (std::size_t i = 0; i + 1 < diffs.size(); ++i) {
    if (diffs[i + 1] > diffs[i]) rep.monotone = false;
  }
  rep.converged = rep.monotone && rep.spread <= tol;

  // Power-law fit of the successive differences against the coarser
  // parameter of each pair.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    if (diffs[i] <= 0.0) continue;
    const double lx = std::log(params[i]);
    const double ly = std::log(diffs[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++cnt;
  }
  if (cnt >= 2 && sxx * cnt - sx * sx > 0.0) {
    rep.rate = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  } else {
    rep.rate = std::numeric_limits<double>::quiet_NaN();
  }

  rep.limit = estimates.back();
  if (richardson && std::isfinite(rep.rate) && rep.rate > 0.0) {
    const double p_last = params.back();
    const double p_prev = params[params.size() - 2];
    const double denom = std::pow(p_prev, rep.rate) - std::pow(p_last, rep.rate);
    if (denom != 0.0) {
      rep.limit -= (estimates[estimates.size() - 2] - estimates.back()) *
                   std::pow(p_last, rep.rate) / denom;
    }
  }
  return rep;
}

LimitReport limit_estimate(const std::function<double(int eps_mult)>& estimator,
                           const EpsSchedule& schedule, double dt, double tol,
                           bool richardson) {
  std::vector<double> params, estimates;
  params.reserve(schedule.size());
  estimates.reserve(schedule.size());
  for (int m : schedule.multiples) {
    params.push_back(m * dt);
    estimates.push_back(estimator(m));
  }
  return analyze_limit(params, estimates, tol, richardson);
}

void write_limit_csv(const LimitReport& report, const std::string& filename) {
  std::ofstream out(filename);
  if (!out) throw NumericalError("write_limit_csv: cannot open " + filename);
  out << report.param_label << ",s,estimate,stderr\n";
  char buf[128];
  if (!report.per_param_path.empty()) {
    for (std::size_t e = 0; e < report.params.size(); ++e) {
      const auto& path = report.per_param_path[e];
      for (std::size_t k = 0; k < path.size(); ++k) {
        const double se = report.per_param_stderr.empty() ? 0.0 : report.per_param_stderr[e][k];
        const double s = report.path_times.empty() ? static_cast<double>(k) : report.path_times[k];
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", report.params[e], s,
                      path[k], se);
        out << buf;
      }
    }
  } else {
    for (std::size_t e = 0; e < report.params.size(); ++e) {
      std::snprintf(buf, sizeof(buf), "%.17g,,%.17g,0\n", report.params[e],
                    report.estimates[e]);
      out << buf;
    }
  }
}

}  // namespace dlab
