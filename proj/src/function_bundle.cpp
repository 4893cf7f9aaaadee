#include "dlab/function_bundle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dlab/errors.hpp"
#include "dlab/qmc.hpp"

namespace dlab {

std::string to_string(RegClass c) {
  switch (c) {
    case RegClass::C0: return "C0";
    case RegClass::C01: return "C01";
    case RegClass::C02ac: return "C02ac";
    case RegClass::C02acCount: return "C02ac_count";
    case RegClass::C12: return "C12";
  }
  return "?";
}

void FunctionBundle::require_second_order(const char* who) const {
  if (!f || !ds_f || !dx_f || !dxx_f) {
    throw UnsupportedError(std::string(who) + ": bundle lacks derivative callbacks");
  }
}

void FunctionBundle::require_gradient(const char* who) const {
  if (!f || !dx_f) {
    throw UnsupportedError(std::string(who) + ": bundle lacks a gradient callback");
  }
}

void FunctionBundle::validate() const {
  if (!f) throw std::invalid_argument("FunctionBundle: f is required");
  if (dim < 1) throw std::invalid_argument("FunctionBundle: dim must be >= 1");
  const bool second_order =
      reg_class == RegClass::C02ac || reg_class == RegClass::C02acCount ||
      reg_class == RegClass::C12;
  if (second_order && !(ds_f && dx_f && dxx_f)) {
    throw std::invalid_argument("FunctionBundle: class " + to_string(reg_class) +
                                " requires ds_f, dx_f and dxx_f");
  }
  if (reg_class == RegClass::C01 && !dx_f) {
    throw std::invalid_argument("FunctionBundle: class C01 requires dx_f");
  }
}

namespace {

double get_param(const std::map<std::string, double>& params, const std::string& key,
                 double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

FunctionBundle catalog(const std::string& name,
                       const std::map<std::string, double>& params) {
  const int d = static_cast<int>(get_param(params, "dim", 1));
  if (d < 1) throw std::invalid_argument("catalog: dim must be >= 1");

  FunctionBundle b;
  b.dim = d;

  if (name == "quadratic") {
    b.reg_class = RegClass::C12;
    b.growth_degree = 2;
    b.f = [](double, const Eigen::VectorXd& x) { return x.squaredNorm(); };
    b.ds_f = [](double, const Eigen::VectorXd&) { return 0.0; };
    b.dx_f = [](double, const Eigen::VectorXd& x) {
      return Eigen::RowVectorXd(2.0 * x.transpose());
    };
    b.dxx_f = [d](double, const Eigen::VectorXd&) {
      return Eigen::MatrixXd(2.0 * Eigen::MatrixXd::Identity(d, d));
    };
  } else if (name == "linear") {
    const double a = get_param(params, "slope", 1.0);
    b.reg_class = RegClass::C12;
    b.growth_degree = 1;
    b.f = [a](double, const Eigen::VectorXd& x) { return a * x.sum(); };
    b.ds_f = [](double, const Eigen::VectorXd&) { return 0.0; };
    b.dx_f = [a, d](double, const Eigen::VectorXd&) {
      return Eigen::RowVectorXd(a * Eigen::RowVectorXd::Ones(d));
    };
    b.dxx_f = [d](double, const Eigen::VectorXd&) {
      return Eigen::MatrixXd(Eigen::MatrixXd::Zero(d, d));
    };
  } else if (name == "kink_time_quadratic") {
    // |s-c| x^2: absolutely continuous in time with a ds_f jump at s=c,
    // second space derivative 2|s-c| continuous, so genuinely C02ac
    // without being C12.
    const double c = get_param(params, "c", 0.5);
    b.reg_class = RegClass::C02ac;
    b.growth_degree = 2;
    b.time_discontinuities = {c};
    b.f = [c](double s, const Eigen::VectorXd& x) { return std::abs(s - c) * x.squaredNorm(); };
    b.ds_f = [c](double s, const Eigen::VectorXd& x) { return sign0(s - c) * x.squaredNorm(); };
    b.dx_f = [c](double s, const Eigen::VectorXd& x) {
      return Eigen::RowVectorXd(2.0 * std::abs(s - c) * x.transpose());
    };
    b.dxx_f = [c, d](double s, const Eigen::VectorXd&) {
      return Eigen::MatrixXd(2.0 * std::abs(s - c) * Eigen::MatrixXd::Identity(d, d));
    };
  } else if (name == "separable") {
    const double lambda = get_param(params, "lambda", 1.0);
    const double c0 = get_param(params, "c0", 0.0);
    b.reg_class = RegClass::C12;
    b.growth_degree = 2;
    b.f = [lambda, c0](double s, const Eigen::VectorXd& x) {
      return std::exp(-lambda * s) * (c0 + x.squaredNorm());
    };
    b.ds_f = [lambda, c0](double s, const Eigen::VectorXd& x) {
      return -lambda * std::exp(-lambda * s) * (c0 + x.squaredNorm());
    };
    b.dx_f = [lambda](double s, const Eigen::VectorXd& x) {
      return Eigen::RowVectorXd(2.0 * std::exp(-lambda * s) * x.transpose());
    };
    b.dxx_f = [lambda, d](double s, const Eigen::VectorXd&) {
      return Eigen::MatrixXd(2.0 * std::exp(-lambda * s) * Eigen::MatrixXd::Identity(d, d));
    };
  } else if (name == "heat_solution") {
    // Solves ds u + (1/2) tr dxx u = 0 with u(T,.) = |x|^2.
    const double T = get_param(params, "T", 1.0);
    b.reg_class = RegClass::C12;
    b.growth_degree = 2;
    b.f = [T, d](double s, const Eigen::VectorXd& x) {
      return x.squaredNorm() + d * (T - s);
    };
    b.ds_f = [d](double, const Eigen::VectorXd&) { return -static_cast<double>(d); };
    b.dx_f = [](double, const Eigen::VectorXd& x) {
      return Eigen::RowVectorXd(2.0 * x.transpose());
    };
    b.dxx_f = [d](double, const Eigen::VectorXd&) {
      return Eigen::MatrixXd(2.0 * Eigen::MatrixXd::Identity(d, d));
    };
  } else if (name == "ou_solution") {
    if (d != 1) throw std::invalid_argument("catalog: ou_solution is one-dimensional");
    const double kappa = get_param(params, "kappa", 1.0);
    const double T = get_param(params, "T", 1.0);
    b.reg_class = RegClass::C12;
    b.growth_degree = 1;
    b.f = [kappa, T](double s, const Eigen::VectorXd& x) {
      return x[0] * std::exp(-kappa * (T - s));
    };
    b.ds_f = [kappa, T](double s, const Eigen::VectorXd& x) {
      return kappa * x[0] * std::exp(-kappa * (T - s));
    };
    b.dx_f = [kappa, T](double s, const Eigen::VectorXd&) {
      return Eigen::RowVectorXd(Eigen::RowVectorXd::Constant(1, std::exp(-kappa * (T - s))));
    };
    b.dxx_f = [](double, const Eigen::VectorXd&) {
      return Eigen::MatrixXd(Eigen::MatrixXd::Zero(1, 1));
    };
  } else if (name == "custom") {
    throw std::invalid_argument(
        "catalog: custom bundles are built programmatically, not from parameters");
  } else {
    throw std::invalid_argument("catalog: unknown bundle name '" + name + "'");
  }

  b.validate();
  return b;
}

Box Box::centered(int dim, double half_width) {
  Box k;
  k.lo = Eigen::VectorXd::Constant(dim, -half_width);
  k.hi = Eigen::VectorXd::Constant(dim, half_width);
  return k;
}

double modulus(const std::function<double(const Eigen::VectorXd&)>& fn, const Box& K,
               double delta, int samples) {
  if (delta < 0.0) throw std::invalid_argument("modulus: delta must be >= 0");
  if (delta == 0.0) return 0.0;
  const int d = K.dim();
  const double diam = (K.hi - K.lo).norm();

  // Pool entries are (base point, direction, radius); the filter on the
  // realized distance is nested across delta, which makes the running max
  // nondecreasing in delta for the fixed pool.
  qmc::RSequence seq(2 * d + 1);
  double best = 0.0;
  for (int i = 0; i < samples; ++i) {
    const Eigen::VectorXd u = seq.next();
    Eigen::VectorXd x(d), dir(d);
    for (int c = 0; c < d; ++c) {
      x[c] = K.lo[c] + u[c] * (K.hi[c] - K.lo[c]);
      dir[c] = 2.0 * u[d + c] - 1.0;
    }
    const double norm = dir.norm();
    if (norm == 0.0) continue;
    dir /= norm;
    const double r = u[2 * d] * diam;
    Eigen::VectorXd y = x + r * dir;
    for (int c = 0; c < d; ++c) y[c] = std::clamp(y[c], K.lo[c], K.hi[c]);
    const double dist = (x - y).norm();
    if (dist > delta || dist == 0.0) continue;
    best = std::max(best, std::abs(fn(x) - fn(y)));
  }
  return best;
}

namespace {

std::vector<Eigen::VectorXd> sample_box(const Box& K, int count) {
  qmc::RSequence seq(K.dim());
  std::vector<Eigen::VectorXd> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const Eigen::VectorXd u = seq.next();
    Eigen::VectorXd x(K.dim());
    for (int c = 0; c < K.dim(); ++c) x[c] = K.lo[c] + u[c] * (K.hi[c] - K.lo[c]);
    out.push_back(std::move(x));
  }
  return out;
}

bool near_declared(double s, const std::vector<double>& declared, double dt) {
  for (double c : declared) {
    if (std::abs(s - c) <= dt) return true;
  }
  return false;
}

}  // namespace

RegularityReport check_c02ac(const FunctionBundle& bundle, const TimeGrid& grid,
                             const Box& K, int samples, double tol) {
  bundle.require_second_order("check_c02ac");
  if (K.dim() != bundle.dim) {
    throw std::invalid_argument("check_c02ac: box dimension must match the bundle");
  }

  RegularityReport rep;
  rep.witness_point = Eigen::VectorXd::Zero(bundle.dim);

  const int n_x = std::clamp(samples / 32, 8, 256);
  const auto xs = sample_box(K, n_x);
  const int d = bundle.dim;

  // Finite, symmetric second derivatives on a (time x space) sample.
  rep.item_space_c2 = true;
  rep.item_time_ac = true;
  const std::int64_t time_stride = std::max<std::int64_t>(1, grid.n_steps / 64);
  for (std::int64_t k = 0; k <= grid.n_steps && rep.item_space_c2; k += time_stride) {
    const double s = grid.time_at(k);
    for (const auto& x : xs) {
      const Eigen::MatrixXd hess = bundle.dxx_f(s, x);
      const double scale = 1.0 + hess.cwiseAbs().maxCoeff();
      if (!hess.allFinite() || (hess - hess.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
        rep.item_space_c2 = false;
        rep.witness_time = s;
        rep.witness_point = x;
        rep.witness_item = "space_c2";
        break;
      }
      if (!std::isfinite(bundle.ds_f(s, x))) {
        rep.item_time_ac = false;
        rep.witness_time = s;
        rep.witness_point = x;
        rep.witness_item = "time_ac";
      }
    }
  }

  // int_t^T sup_K |ds_f| ds by trapezoid over the grid, sup over samples.
  double l1 = 0.0;
  for (std::int64_t k = 0; k <= grid.n_steps; ++k) {
    const double s = grid.time_at(k);
    double sup = 0.0;
    for (const auto& x : xs) sup = std::max(sup, std::abs(bundle.ds_f(s, x)));
    const double w = (k == 0 || k == grid.n_steps) ? 0.5 : 1.0;
    l1 += w * sup * grid.dt;
  }
  rep.l1_time_bound = l1;
  rep.item_l1_bound = std::isfinite(l1);

  // Uniform-in-s spatial modulus of each second derivative on K.
  const double delta_ref = (K.hi - K.lo).norm() / 64.0;
  double defect = 0.0;
  double witness_defect_time = grid.t0;
  for (std::int64_t k = 0; k <= grid.n_steps; k += std::max<std::int64_t>(1, grid.n_steps / 16)) {
    const double s = grid.time_at(k);
    for (int i = 0; i < d; ++i) {
      for (int j = i; j < d; ++j) {
        const double m = modulus(
            [&](const Eigen::VectorXd& x) { return bundle.dxx_f(s, x)(i, j); }, K, delta_ref,
            std::max(256, samples / 8));
        if (m > defect) {
          defect = m;
          witness_defect_time = s;
        }
      }
    }
  }
  rep.space_uniformity_defect = defect;
  rep.item_space_uniform = defect <= tol;
  if (!rep.item_space_uniform && rep.witness_item.empty()) {
    rep.witness_time = witness_defect_time;
    rep.witness_item = "space_uniform";
  }

  // Candidate discontinuities of s -> dxx_f(s,x): a jump is flagged when a
  // one-step move exceeds 10x the local inter-sample variation.
  const int n_probe = std::min<int>(8, n_x);
  std::vector<double> series(grid.n_steps + 1);
  for (int p = 0; p < n_probe; ++p) {
    const auto& x = xs[p];
    for (int i = 0; i < d; ++i) {
      for (int j = i; j < d; ++j) {
        for (std::int64_t k = 0; k <= grid.n_steps; ++k) {
          series[k] = bundle.dxx_f(grid.time_at(k), x)(i, j);
        }
        double scale = 0.0;
        for (std::int64_t k = 0; k <= grid.n_steps; ++k) {
          scale = std::max(scale, std::abs(series[k]));
        }
        const double floor = 1e-9 * (1.0 + scale);
        for (std::int64_t k = 0; k + 1 <= grid.n_steps; ++k) {
          const double jump = std::abs(series[k + 1] - series[k]);
          if (jump <= floor) continue;
          double local = 0.0;
          int cnt = 0;
          for (std::int64_t w = std::max<std::int64_t>(0, k - 8);
               w + 1 <= std::min<std::int64_t>(grid.n_steps, k + 8); ++w) {
            if (w == k) continue;
            local += std::abs(series[w + 1] - series[w]);
            ++cnt;
          }
          local = cnt > 0 ? local / cnt : 0.0;
          if (jump > 10.0 * local + floor) {
            const double site = grid.time_at(k) + 0.5 * grid.dt;
            bool dup = false;
            for (double s0 : rep.time_jump_sites) {
              if (std::abs(s0 - site) <= grid.dt) dup = true;
            }
            if (!dup) rep.time_jump_sites.push_back(site);
          }
        }
      }
    }
  }
  std::sort(rep.time_jump_sites.begin(), rep.time_jump_sites.end());

  rep.item_time_jumps = true;
  for (double site : rep.time_jump_sites) {
    if (!near_declared(site, bundle.time_discontinuities, grid.dt)) {
      rep.item_time_jumps = false;
      if (rep.witness_item.empty()) {
        rep.witness_time = site;
        rep.witness_item = "time_jumps";
      }
      // countable discontinuities are admissible for the count class
      if (bundle.reg_class == RegClass::C02acCount) rep.item_time_jumps = true;
    }
  }

  rep.pass = rep.item_space_c2 && rep.item_time_ac && rep.item_l1_bound &&
             rep.item_space_uniform && rep.item_time_jumps;
  return rep;
}

}  // namespace dlab
