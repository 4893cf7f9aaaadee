#include "dlab/pde_mild.hpp"

#include <cmath>
#include <stdexcept>

#include "dlab/errors.hpp"
#include "dlab/parallel.hpp"
#include "dlab/rng.hpp"

namespace dlab {

SdeSpec CauchyProblem::to_sde() const {
  SdeSpec sde = SdeSpec::from_fields(state_dim, noise_dim, b, sigma);
  if (db) sde.drift_jacobian = db;
  if (dsigma) sde.diffusion_jacobian = dsigma;
  return sde;
}

bool CauchyProblem::has_gradient_data() const {
  return static_cast<bool>(dg) && static_cast<bool>(db) && static_cast<bool>(dsigma);
}

void CauchyProblem::validate() const {
  if (!sigma || !b || !h || !g) {
    throw std::invalid_argument("CauchyProblem: sigma, b, h, g are required");
  }
  if (state_dim < 1 || noise_dim < 1) {
    throw std::invalid_argument("CauchyProblem: dimensions must be >= 1");
  }
  if (!(terminal_time > 0.0) || !std::isfinite(terminal_time)) {
    throw std::invalid_argument("CauchyProblem: terminal_time must be positive and finite");
  }
}

double CauchyProblem::nondegeneracy_margin(std::uint64_t seed, int draws) const {
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < draws; ++i) {
    const double s = terminal_time * rng::uniform01(seed, 3 * i);
    Eigen::VectorXd x(state_dim), xi(state_dim);
    for (int c = 0; c < state_dim; ++c) {
      x[c] = 4.0 * (rng::uniform01(seed, 1000 + i * state_dim + c) - 0.5);
      xi[c] = rng::normal(seed, 2000 + i * state_dim + c);
    }
    if (xi.norm() == 0.0) continue;
    const Eigen::MatrixXd sv = sigma(s, x);
    const double ratio = xi.dot(sv * sv.transpose() * xi) / xi.squaredNorm();
    worst = std::min(worst, ratio);
  }
  return worst;
}

namespace {

double get_param(const std::map<std::string, double>& params, const std::string& key,
                 double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

}  // namespace

CauchyProblem make_problem(const std::string& name,
                           const std::map<std::string, double>& params) {
  CauchyProblem p;
  p.terminal_time = get_param(params, "T", 1.0);
  p.state_dim = 1;
  p.noise_dim = 1;

  const auto unit_sigma = [](double, const Eigen::VectorXd&) {
    return Eigen::MatrixXd(Eigen::MatrixXd::Identity(1, 1));
  };
  const auto zero_drift = [](double, const Eigen::VectorXd&) {
    return Eigen::VectorXd(Eigen::VectorXd::Zero(1));
  };
  const auto zero_source = [](double, const Eigen::VectorXd&) { return 0.0; };
  const auto zero_jac = [](double, const Eigen::VectorXd&) {
    return Eigen::MatrixXd(Eigen::MatrixXd::Zero(1, 1));
  };
  const auto zero_dsigma = [](double, const Eigen::VectorXd&) {
    return std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Zero(1, 1)};
  };

  if (name == "heat_quadratic") {
    p.growth_degree = 2;
    p.nondegenerate = true;
    p.nondeg_constant = 1.0;
    p.sigma = unit_sigma;
    p.b = zero_drift;
    p.h = zero_source;
    p.g = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
    p.dg = [](const Eigen::VectorXd& x) { return Eigen::RowVectorXd(2.0 * x.transpose()); };
    p.dh = [](double, const Eigen::VectorXd&) {
      return Eigen::RowVectorXd(Eigen::RowVectorXd::Zero(1));
    };
    p.db = zero_jac;
    p.dsigma = zero_dsigma;
  } else if (name == "constant_source") {
    p.growth_degree = 0;
    p.nondegenerate = true;
    p.nondeg_constant = 1.0;
    p.sigma = unit_sigma;
    p.b = zero_drift;
    p.h = [](double, const Eigen::VectorXd&) { return 1.0; };
    p.g = [](const Eigen::VectorXd&) { return 0.0; };
    p.dg = [](const Eigen::VectorXd&) { return Eigen::RowVectorXd(Eigen::RowVectorXd::Zero(1)); };
    p.dh = [](double, const Eigen::VectorXd&) {
      return Eigen::RowVectorXd(Eigen::RowVectorXd::Zero(1));
    };
    p.db = zero_jac;
    p.dsigma = zero_dsigma;
  } else if (name == "ou_linear") {
    const double kappa = get_param(params, "kappa", 1.0);
    p.growth_degree = 1;
    p.nondegenerate = true;
    p.nondeg_constant = 1.0;
    p.sigma = unit_sigma;
    p.b = [kappa](double, const Eigen::VectorXd& x) { return Eigen::VectorXd(-kappa * x); };
    p.h = zero_source;
    p.g = [](const Eigen::VectorXd& x) { return x[0]; };
    p.dg = [](const Eigen::VectorXd&) { return Eigen::RowVectorXd(Eigen::RowVectorXd::Ones(1)); };
    p.dh = [](double, const Eigen::VectorXd&) {
      return Eigen::RowVectorXd(Eigen::RowVectorXd::Zero(1));
    };
    p.db = [kappa](double, const Eigen::VectorXd&) {
      return Eigen::MatrixXd(Eigen::MatrixXd::Constant(1, 1, -kappa));
    };
    p.dsigma = zero_dsigma;
  } else {
    throw std::invalid_argument("make_problem: unknown problem name '" + name + "'");
  }
  p.validate();
  return p;
}

void McConfig::validate() const {
  if (n_paths < 2) throw std::invalid_argument("McConfig: M must be >= 2");
  if (n_steps < 2) throw std::invalid_argument("McConfig: n_steps must be >= 2");
  if (antithetic && n_paths % 2 != 0) {
    throw std::invalid_argument("McConfig: antithetic needs an even M");
  }
}

double apply_generator(const FunctionBundle& bundle, const CauchyProblem& prob, double s,
                       const Eigen::VectorXd& x) {
  if (!bundle.dx_f || !bundle.dxx_f) {
    throw UnsupportedError("apply_generator: bundle lacks dx_f/dxx_f");
  }
  const Eigen::RowVectorXd grad = bundle.dx_f(s, x);
  const Eigen::MatrixXd hess = bundle.dxx_f(s, x);
  const Eigen::MatrixXd sv = prob.sigma(s, x);
  const double first = grad.dot(prob.b(s, x));
  const double second = 0.5 * (sv.transpose() * hess * sv).trace();
  return first + second;
}

double quasi_strict_residual(const FunctionBundle& bundle, const CauchyProblem& prob,
                             const Eigen::VectorXd& x, const TimeGrid& grid) {
  bundle.require_second_order("quasi_strict_residual");
  const auto n = grid.n_steps;
  const double gx = prob.g(x);

  std::vector<double> h_vals(n + 1), a_vals(n + 1);
  for (std::int64_t k = 0; k <= n; ++k) {
    const double s = grid.time_at(k);
    h_vals[k] = prob.h(s, x);
    a_vals[k] = apply_generator(bundle, prob, s, x);
  }
  // Suffix trapezoid sums of h and A.u from s_k to T.
  std::vector<double> ih(n + 1, 0.0), ia(n + 1, 0.0);
  for (std::int64_t k = n - 1; k >= 0; --k) {
    ih[k] = ih[k + 1] + 0.5 * (h_vals[k] + h_vals[k + 1]) * grid.dt;
    ia[k] = ia[k + 1] + 0.5 * (a_vals[k] + a_vals[k + 1]) * grid.dt;
  }
  double sup = 0.0;
  for (std::int64_t k = 0; k <= n; ++k) {
    const double u = bundle.f(grid.time_at(k), x);
    sup = std::max(sup, std::abs(u - gx + ih[k] - ia[k]));
  }
  return sup;
}

namespace {

struct PathAccumulator {
  double sum{0.0};
  double sum_sq{0.0};

  void add(double v) {
    sum += v;
    sum_sq += v * v;
  }
  Estimate finish(std::int64_t m) const {
    Estimate e;
    e.n_paths = m;
    e.value = sum / static_cast<double>(m);
    const double var =
        std::max(0.0, (sum_sq - sum * sum / static_cast<double>(m)) /
                          static_cast<double>(m - 1));
    e.std_error = std::sqrt(var / static_cast<double>(m));
    return e;
  }
};

}  // namespace

Estimate mild_solve(const CauchyProblem& prob, double s, const Eigen::VectorXd& x,
                    const McConfig& mc) {
  prob.validate();
  mc.validate();
  if (!(s < prob.terminal_time)) {
    throw std::invalid_argument("mild_solve: needs s < terminal_time");
  }
  if (x.size() != prob.state_dim) {
    throw std::invalid_argument("mild_solve: state has wrong dimension");
  }
  if (prob.growth_degree < 0) {
    throw std::invalid_argument("mild_solve: growth degree must be finite and >= 0");
  }

  const TimeGrid grid = make_grid(s, prob.terminal_time, mc.n_steps);
  const double sqrt_dt = std::sqrt(grid.dt);
  const int d = prob.state_dim;
  const int m_noise = prob.noise_dim;

  // One estimator value per path, streamed: paths are never materialized.
  const std::int64_t m = mc.n_paths;
  std::vector<double> per_path(m);
  parallel_for(m, [&](std::int64_t i) {
    const std::int64_t base = mc.antithetic ? i / 2 : i;
    const double flip = (mc.antithetic && (i % 2 == 1)) ? -1.0 : 1.0;
    const std::uint64_t path_seed =
        rng::child_seed(mc.seed, static_cast<std::uint64_t>(base));

    Eigen::VectorXd state = x;
    Eigen::VectorXd dw(m_noise);
    double h_int = 0.0;
    for (std::int64_t k = 0; k < grid.n_steps; ++k) {
      const double sk = grid.time_at(k);
      h_int += prob.h(sk, state) * grid.dt;
      for (int c = 0; c < m_noise; ++c) {
        const auto ctr = static_cast<std::uint64_t>(k) * m_noise + c;
        dw[c] = flip * sqrt_dt * rng::normal(path_seed, ctr);
      }
      state += prob.b(sk, state) * grid.dt + prob.sigma(sk, state) * dw;
      if (!state.allFinite()) {
        throw BlowupError("mild_solve: path blow-up", i, k + 1);
      }
    }
    per_path[i] = prob.g(state) - h_int;
  });

  PathAccumulator acc;
  for (double v : per_path) acc.add(v);
  return acc.finish(m);
}

std::vector<Estimate> mild_grad(const CauchyProblem& prob, double s,
                                const Eigen::VectorXd& x, const McConfig& mc) {
  prob.validate();
  mc.validate();
  if (!prob.has_gradient_data() || !prob.dh) {
    throw UnsupportedError("mild_grad: problem lacks derivative callbacks");
  }
  if (!(s < prob.terminal_time)) {
    throw std::invalid_argument("mild_grad: needs s < terminal_time");
  }

  const TimeGrid grid = make_grid(s, prob.terminal_time, mc.n_steps);
  const double sqrt_dt = std::sqrt(grid.dt);
  const int d = prob.state_dim;
  const int m_noise = prob.noise_dim;
  const std::int64_t m = mc.n_paths;

  Eigen::MatrixXd per_path(m, d);
  parallel_for(m, [&](std::int64_t i) {
    const std::int64_t base = mc.antithetic ? i / 2 : i;
    const double flip = (mc.antithetic && (i % 2 == 1)) ? -1.0 : 1.0;
    const std::uint64_t path_seed =
        rng::child_seed(mc.seed, static_cast<std::uint64_t>(base));

    Eigen::VectorXd state = x;
    Eigen::MatrixXd z = Eigen::MatrixXd::Identity(d, d);
    Eigen::RowVectorXd h_term = Eigen::RowVectorXd::Zero(d);
    Eigen::VectorXd dw(m_noise);
    for (std::int64_t k = 0; k < grid.n_steps; ++k) {
      const double sk = grid.time_at(k);
      h_term += prob.dh(sk, state) * z * grid.dt;
      for (int c = 0; c < m_noise; ++c) {
        const auto ctr = static_cast<std::uint64_t>(k) * m_noise + c;
        dw[c] = flip * sqrt_dt * rng::normal(path_seed, ctr);
      }
      const Eigen::MatrixXd jb = prob.db(sk, state);
      const std::vector<Eigen::MatrixXd> jsig = prob.dsigma(sk, state);
      Eigen::MatrixXd z_incr = jb * z * grid.dt;
      for (int j = 0; j < m_noise; ++j) {
        Eigen::MatrixXd dsig_j(d, d);
        for (int l = 0; l < d; ++l) dsig_j.col(l) = jsig[l].col(j);
        z_incr += dsig_j * z * dw[j];
      }
      state += prob.b(sk, state) * grid.dt + prob.sigma(sk, state) * dw;
      z += z_incr;
      if (!state.allFinite() || !z.allFinite()) {
        throw BlowupError("mild_grad: path blow-up", i, k + 1);
      }
    }
    per_path.row(i) = prob.dg(state) * z - h_term;
  });

  std::vector<Estimate> out(d);
  for (int c = 0; c < d; ++c) {
    PathAccumulator acc;
    for (std::int64_t i = 0; i < m; ++i) acc.add(per_path(i, c));
    out[c] = acc.finish(m);
  }
  return out;
}

double oracle_solution(const std::string& name, const std::map<std::string, double>& params,
                       double s, const Eigen::VectorXd& x) {
  const double T = get_param(params, "T", 1.0);
  if (name == "heat_quadratic") {
    return x.squaredNorm() + static_cast<double>(x.size()) * (T - s);
  }
  if (name == "constant_source") {
    return -(T - s);
  }
  if (name == "ou_linear") {
    const double kappa = get_param(params, "kappa", 1.0);
    return x[0] * std::exp(-kappa * (T - s));
  }
  throw std::invalid_argument("oracle_solution: unknown oracle '" + name + "'");
}

MomentReport polynomial_moment_check(const CauchyProblem& prob, int p, const McConfig& mc,
                                     const std::vector<double>& x_probes) {
  if (p < 1) throw std::invalid_argument("polynomial_moment_check: p must be >= 1");
  prob.validate();
  mc.validate();

  MomentReport rep;
  rep.p = p;
  rep.x_values = x_probes;

  const TimeGrid grid = make_grid(0.0, prob.terminal_time, mc.n_steps);
  const double sqrt_dt = std::sqrt(grid.dt);
  const int m_noise = prob.noise_dim;

  for (double xv : x_probes) {
    Eigen::VectorXd x0 = Eigen::VectorXd::Constant(prob.state_dim, xv);
    // sup over times of the ensemble mean of |X_s|^p.
    std::vector<double> mean_per_step(grid.n_steps + 1, 0.0);
    std::vector<std::vector<double>> partial(mc.n_paths);
    parallel_for(mc.n_paths, [&](std::int64_t i) {
      const std::uint64_t path_seed = rng::child_seed(mc.seed, static_cast<std::uint64_t>(i));
      Eigen::VectorXd state = x0;
      Eigen::VectorXd dw(m_noise);
      std::vector<double> moments(grid.n_steps + 1);
      moments[0] = std::pow(state.norm(), p);
      for (std::int64_t k = 0; k < grid.n_steps; ++k) {
        const double sk = grid.time_at(k);
        for (int c = 0; c < m_noise; ++c) {
          dw[c] = sqrt_dt * rng::normal(path_seed, static_cast<std::uint64_t>(k) * m_noise + c);
        }
        state += prob.b(sk, state) * grid.dt + prob.sigma(sk, state) * dw;
        if (!state.allFinite()) throw BlowupError("polynomial_moment_check: blow-up", i, k + 1);
        moments[k + 1] = std::pow(state.norm(), p);
      }
      partial[i] = std::move(moments);
    });
    for (const auto& path_moments : partial) {
      for (std::size_t k = 0; k < path_moments.size(); ++k) {
        mean_per_step[k] += path_moments[k];
      }
    }
    double sup = 0.0;
    for (double& v : mean_per_step) {
      v /= static_cast<double>(mc.n_paths);
      sup = std::max(sup, v);
    }
    rep.sup_moments.push_back(sup);
  }

  double max_ratio = 0.0;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < rep.x_values.size(); ++i) {
    const double w = 1.0 + std::pow(std::abs(rep.x_values[i]), p);
    max_ratio = std::max(max_ratio, rep.sup_moments[i] / w);
    const double xp = std::pow(std::abs(rep.x_values[i]), p);
    sxx += xp * xp;
    sxy += xp * rep.sup_moments[i];
  }
  rep.fitted_c = max_ratio;
  rep.fitted_slope = sxx > 0.0 ? sxy / sxx : 0.0;
  return rep;
}

}  // namespace dlab
