#include "dlab/quasi_strong.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "dlab/errors.hpp"
#include "dlab/parallel.hpp"
#include "dlab/qmc.hpp"
#include "dlab/rng.hpp"

namespace dlab {

namespace {

// Quintic smoothstep: C^2, monotone, s(0)=0, s(1)=1, s(1/2)=1/2.
double smoothstep(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

double cutoff_1d(double x, double n) {
  const double a = std::abs(x);
  if (a <= n) return 1.0;
  if (a >= n + 1.0) return 0.0;
  return smoothstep(n + 1.0 - a);
}

double bump(const Eigen::VectorXd& xi) {
  const double r2 = xi.squaredNorm();
  if (r2 >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - r2));
}

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
}

struct MollifierRule {
  std::vector<Eigen::VectorXd> nodes;
  std::vector<double> weights;  // normalized: sum(w_q) = 1 against phi
};

MollifierRule build_rule(int dim) {
  MollifierRule rule;
  if (dim <= 2) {
    std::vector<double> n1, w1;
    gauss_legendre(16, n1, w1);
    if (dim == 1) {
      for (int i = 0; i < 16; ++i) {
        Eigen::VectorXd xi(1);
        xi << n1[i];
        const double p = bump(xi);
        if (p == 0.0) continue;
        rule.nodes.push_back(xi);
        rule.weights.push_back(w1[i] * p);
      }
    } else {
      for (int i = 0; i < 16; ++i) {
        for (int j = 0; j < 16; ++j) {
          Eigen::VectorXd xi(2);
          xi << n1[i], n1[j];
          const double p = bump(xi);
          if (p == 0.0) continue;
          rule.nodes.push_back(xi);
          rule.weights.push_back(w1[i] * w1[j] * p);
        }
      }
    }
  } else {
    qmc::RSequence seq(dim);
    for (int q = 0; q < 4096; ++q) {
      const Eigen::VectorXd u = seq.next();
      Eigen::VectorXd xi = 2.0 * u.array() - 1.0;
      const double p = bump(xi);
      if (p == 0.0) continue;
      rule.nodes.push_back(xi);
      rule.weights.push_back(p);
    }
  }
  double z = 0.0;
  for (double w : rule.weights) z += w;
  if (!(z > 0.0)) throw NumericalError("mollify: degenerate quadrature rule");
  double total = 0.0;
  for (double& w : rule.weights) {
    w /= z;
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-10) {
    throw NumericalError("mollify: quadrature weight normalization drift");
  }
  return rule;
}

}  // namespace

ScalarField truncate(const ScalarField& h, int n) {
  if (n < 1) throw std::invalid_argument("truncate: n must be >= 1");
  const double level = static_cast<double>(n);
  return [h, level](double s, const Eigen::VectorXd& x) {
    double chi = 1.0;
    for (int c = 0; c < x.size() && chi > 0.0; ++c) chi *= cutoff_1d(x[c], level);
    return chi == 0.0 ? 0.0 : h(s, x) * chi;
  };
}

ScalarField mollify(const ScalarField& h, int n, int dim) {
  if (n < 1) throw std::invalid_argument("mollify: n must be >= 1");
  if (dim < 1) throw std::invalid_argument("mollify: dim must be >= 1");
  auto rule = std::make_shared<MollifierRule>(build_rule(dim));
  const double inv_n = 1.0 / static_cast<double>(n);
  return [h, rule, inv_n](double s, const Eigen::VectorXd& y) {
    double acc = 0.0;
    for (std::size_t q = 0; q < rule->nodes.size(); ++q) {
      acc += rule->weights[q] * h(s, y - inv_n * rule->nodes[q]);
    }
    return acc;
  };
}

ScalarField mollify_grad(const ScalarField& h, int n, int dim, int comp) {
  if (n < 1) throw std::invalid_argument("mollify_grad: n must be >= 1");
  if (comp < 0 || comp >= dim) throw std::invalid_argument("mollify_grad: bad component");
  auto rule = std::make_shared<MollifierRule>(build_rule(dim));
  // d_comp phi(xi) = phi(xi) * (-2 xi_comp) / (1 - |xi|^2)^2; the weights
  // already carry phi/Z, so scale each node by the logarithmic factor.
  std::vector<double> factors(rule->nodes.size());
  for (std::size_t q = 0; q < rule->nodes.size(); ++q) {
    const Eigen::VectorXd& xi = rule->nodes[q];
    const double den = 1.0 - xi.squaredNorm();
    factors[q] = -2.0 * xi[comp] / (den * den);
  }
  const double scale = static_cast<double>(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  return [h, rule, factors, inv_n, scale](double s, const Eigen::VectorXd& y) {
    double acc = 0.0;
    for (std::size_t q = 0; q < rule->nodes.size(); ++q) {
      acc += rule->weights[q] * factors[q] * h(s, y - inv_n * rule->nodes[q]);
    }
    return scale * acc;
  };
}

ApproxSequence build_sequence(const CauchyProblem& prob, const std::vector<int>& indices,
                              const Box& K, const EvalGrid& eval, const McConfig& mc,
                              bool with_gradients) {
  prob.validate();
  mc.validate();
  if (indices.empty()) throw std::invalid_argument("build_sequence: empty index list");
  for (std::size_t i = 0; i + 1 < indices.size(); ++i) {
    if (indices[i] >= indices[i + 1]) {
      throw std::invalid_argument("build_sequence: indices must be strictly increasing");
    }
  }
  if (eval.times.empty() || eval.points.empty()) {
    throw std::invalid_argument("build_sequence: empty evaluation grid");
  }
  if (with_gradients && prob.state_dim != 1) {
    throw UnsupportedError("build_sequence: gradient surfaces are one-dimensional in v1");
  }
  if (with_gradients && !(prob.db && prob.dsigma && prob.dh)) {
    throw UnsupportedError("build_sequence: gradients need db, dsigma and dh");
  }

  // The construction assumes a vanishing terminal condition; general g
  // separates off as the fixed term P_{s,T} g by linearity.
  qmc::RSequence probe(prob.state_dim);
  for (int i = 0; i < 16; ++i) {
    const Eigen::VectorXd u = probe.next();
    Eigen::VectorXd x(prob.state_dim);
    for (int c = 0; c < prob.state_dim; ++c) x[c] = K.lo[c] + u[c] * (K.hi[c] - K.lo[c]);
    if (std::abs(prob.g(x)) > 1e-12) {
      throw std::invalid_argument("build_sequence: requires g == 0");
    }
  }

  const double t_min = *std::min_element(eval.times.begin(), eval.times.end());
  const TimeGrid master = make_grid(t_min, prob.terminal_time, mc.n_steps);
  std::vector<std::int64_t> start_steps;
  for (double t : eval.times) {
    const double pos = (t - master.t0) / master.dt;
    const auto k0 = static_cast<std::int64_t>(std::llround(pos));
    if (std::abs(pos - static_cast<double>(k0)) > 1e-9 || k0 < 0 || k0 >= master.n_steps) {
      throw std::invalid_argument("build_sequence: eval times must sit on the master grid");
    }
    start_steps.push_back(k0);
  }

  ApproxSequence seq;
  seq.indices = indices;
  seq.eval = eval;
  seq.has_gradients = with_gradients;

  std::vector<ScalarField> sources;
  std::vector<ScalarField> grad_sources;
  for (int n : indices) {
    seq.h_n.push_back(mollify(truncate(prob.h, n), n, prob.state_dim));
    sources.push_back(seq.h_n.back());
    if (with_gradients) {
      grad_sources.push_back(mollify_grad(truncate(prob.h, n), n, prob.state_dim, 0));
    }
  }
  sources.push_back(prob.h);  // reference
  if (with_gradients) {
    grad_sources.push_back([&prob](double s, const Eigen::VectorXd& x) {
      return prob.dh(s, x)[0];
    });
  }

  const std::size_t n_src = sources.size();
  const std::size_t n_times = eval.times.size();
  const std::size_t n_pts = eval.points.size();
  const double sqrt_dt = std::sqrt(master.dt);
  const int m_noise = prob.noise_dim;
  const int d = prob.state_dim;

  for (std::size_t src = 0; src + 1 < n_src; ++src) {
    seq.u_n.emplace_back(Eigen::MatrixXd::Zero(n_times, n_pts));
    if (with_gradients) seq.grad_n.emplace_back(Eigen::MatrixXd::Zero(n_times, n_pts));
  }
  seq.u_ref = Eigen::MatrixXd::Zero(n_times, n_pts);
  if (with_gradients) seq.grad_ref = Eigen::MatrixXd::Zero(n_times, n_pts);

  // One noise stream per path index, shared across every start point and
  // every source (common random numbers).
  for (std::size_t ti = 0; ti < n_times; ++ti) {
    const std::int64_t k0 = start_steps[ti];
    for (std::size_t pj = 0; pj < n_pts; ++pj) {
      const Eigen::VectorXd& x0 = eval.points[pj];
      std::vector<Eigen::VectorXd> acc(mc.n_paths,
                                       Eigen::VectorXd::Zero(2 * n_src));
      parallel_for(mc.n_paths, [&](std::int64_t p) {
        const std::uint64_t path_seed =
            rng::child_seed(mc.seed, static_cast<std::uint64_t>(p));
        Eigen::VectorXd state = x0;
        Eigen::MatrixXd z = Eigen::MatrixXd::Identity(d, d);
        Eigen::VectorXd dw(m_noise);
        Eigen::VectorXd& sums = acc[p];
        for (std::int64_t k = k0; k < master.n_steps; ++k) {
          const double sk = master.time_at(k);
          for (std::size_t src = 0; src < n_src; ++src) {
            sums[src] -= sources[src](sk, state) * master.dt;
            if (with_gradients) {
              sums[n_src + src] -= grad_sources[src](sk, state) * z(0, 0) * master.dt;
            }
          }
          for (int c = 0; c < m_noise; ++c) {
            dw[c] = sqrt_dt *
                    rng::normal(path_seed, static_cast<std::uint64_t>(k) * m_noise + c);
          }
          if (with_gradients) {
            const Eigen::MatrixXd jb = prob.db(sk, state);
            const auto jsig = prob.dsigma(sk, state);
            Eigen::MatrixXd z_incr = jb * z * master.dt;
            for (int j = 0; j < m_noise; ++j) {
              Eigen::MatrixXd dsig_j(d, d);
              for (int l = 0; l < d; ++l) dsig_j.col(l) = jsig[l].col(j);
              z_incr += dsig_j * z * dw[j];
            }
            z += z_incr;
          }
          state += prob.b(sk, state) * master.dt + prob.sigma(sk, state) * dw;
          if (!state.allFinite()) {
            throw BlowupError("build_sequence: path blow-up", p, k + 1);
          }
        }
      });
      for (std::size_t src = 0; src < n_src; ++src) {
        double mean = 0.0, gmean = 0.0;
        for (std::int64_t p = 0; p < mc.n_paths; ++p) {
          mean += acc[p][src];
          if (with_gradients) gmean += acc[p][n_src + src];
        }
        mean /= static_cast<double>(mc.n_paths);
        gmean /= static_cast<double>(mc.n_paths);
        if (src + 1 == n_src) {
          seq.u_ref(ti, pj) = mean;
          if (with_gradients) seq.grad_ref(ti, pj) = gmean;
        } else {
          seq.u_n[src](ti, pj) = mean;
          if (with_gradients) seq.grad_n[src](ti, pj) = gmean;
        }
      }
    }
  }
  return seq;
}

ConvergenceReport convergence_report(const ApproxSequence& seq, const ScalarField& h,
                                     const Box& K, const TimeGrid& time_grid, double tol_u,
                                     double tol_h) {
  if (seq.u_n.size() != seq.indices.size() || seq.h_n.size() != seq.indices.size()) {
    throw std::invalid_argument("convergence_report: incomplete sequence");
  }
  ConvergenceReport rep;
  rep.indices = seq.indices;
  rep.tol_u = tol_u;
  rep.tol_h = tol_h;

  for (std::size_t i = 0; i < seq.indices.size(); ++i) {
    rep.sup_u_err.push_back((seq.u_n[i] - seq.u_ref).cwiseAbs().maxCoeff());
  }

  // Space sups on a deterministic grid over K that contains the corners
  // and the center (the kinks of the built-in sources live there).
  const int d = K.dim();
  std::vector<Eigen::VectorXd> xs;
  if (d == 1) {
    const int n_x = 513;
    for (int i = 0; i < n_x; ++i) {
      Eigen::VectorXd x(1);
      x[0] = K.lo[0] + (K.hi[0] - K.lo[0]) * i / double(n_x - 1);
      xs.push_back(x);
    }
  } else {
    qmc::RSequence sampler(d);
    for (int i = 0; i < 1024; ++i) {
      const Eigen::VectorXd u = sampler.next();
      Eigen::VectorXd x(d);
      for (int c = 0; c < d; ++c) x[c] = K.lo[c] + u[c] * (K.hi[c] - K.lo[c]);
      xs.push_back(x);
    }
    xs.push_back(Eigen::VectorXd::Zero(d));
  }

  for (std::size_t i = 0; i < seq.indices.size(); ++i) {
    double l1 = 0.0;
    for (std::int64_t k = 0; k <= time_grid.n_steps; ++k) {
      const double s = time_grid.time_at(k);
      double sup = 0.0;
      for (const auto& x : xs) sup = std::max(sup, std::abs(seq.h_n[i](s, x) - h(s, x)));
      const double w = (k == 0 || k == time_grid.n_steps) ? 0.5 : 1.0;
      l1 += w * sup * time_grid.dt;
    }
    rep.l1_h_err.push_back(l1);
  }

  auto eventually_decreasing = [](const std::vector<double>& v) {
    if (v.size() < 2) return false;
    std::size_t peak = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (v[i] > v[peak]) peak = i;
    }
    if (peak + 1 >= v.size()) return false;
    for (std::size_t i = peak; i + 1 < v.size(); ++i) {
      if (v[i + 1] > v[i]) return false;
    }
    return true;
  };
  auto fit_trend = [](const std::vector<int>& ns, const std::vector<double>& v) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] <= 0.0) continue;
      const double lx = std::log(double(ns[i]));
      const double ly = std::log(v[i]);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++cnt;
    }
    if (cnt < 2 || cnt * sxx - sx * sx <= 0.0) return 0.0;
    return (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  };

  rep.trend_u = fit_trend(rep.indices, rep.sup_u_err);
  rep.trend_h = fit_trend(rep.indices, rep.l1_h_err);
  rep.pass = eventually_decreasing(rep.sup_u_err) && eventually_decreasing(rep.l1_h_err) &&
             rep.sup_u_err.back() <= tol_u && rep.l1_h_err.back() <= tol_h;
  return rep;
}

void write_ladder_csv(const ConvergenceReport& rep, const std::string& filename) {
  std::ofstream out(filename);
  if (!out) throw NumericalError("write_ladder_csv: cannot open " + filename);
  out << "n,sup_u_err,l1_h_err\n";
  char buf[96];
  for (std::size_t i = 0; i < rep.indices.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", rep.indices[i], rep.sup_u_err[i],
                  rep.l1_h_err[i]);
    out << buf;
  }
}

}  // namespace dlab
