#include "dlab/generators.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>

#include "dlab/errors.hpp"
#include "dlab/parallel.hpp"
#include "dlab/rng.hpp"

namespace dlab {

PathEnsemble gen_brownian(const TimeGrid& grid, int dim, std::int64_t n_paths,
                          std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("gen_brownian: dim must be >= 1");
  if (n_paths < 1) throw std::invalid_argument("gen_brownian: M must be >= 1");

  PathEnsemble out;
  out.seed = seed;
  out.label = "brownian";
  out.paths.assign(n_paths, SamplePath(grid, dim));

  const double sqrt_dt = std::sqrt(grid.dt);
  parallel_for(n_paths, [&](std::int64_t i) {
    const std::uint64_t path_seed = rng::child_seed(seed, static_cast<std::uint64_t>(i));
    Eigen::MatrixXd& vals = out.paths[i].values();
    for (std::int64_t k = 0; k < grid.n_steps; ++k) {
      for (int c = 0; c < dim; ++c) {
        const auto ctr = static_cast<std::uint64_t>(k) * dim + c;
        vals(k + 1, c) = vals(k, c) + sqrt_dt * rng::normal(path_seed, ctr);
      }
    }
  });
  return out;
}

PathEnsemble gen_fbm(const TimeGrid& grid, double hurst, std::int64_t n_paths,
                     std::uint64_t seed) {
  if (!(hurst > 0.0 && hurst < 1.0)) {
    throw std::invalid_argument("gen_fbm: hurst must lie in (0,1)");
  }
  if (n_paths < 1) throw std::invalid_argument("gen_fbm: M must be >= 1");
  if (grid.n_steps > (1 << 14)) {
    throw std::invalid_argument("gen_fbm: n_steps must be <= 2^14 at desk scale");
  }

  const auto n = grid.n_steps;
  const double h2 = 2.0 * hurst;

  // Covariance of the path levels at elapsed times tau_k = k*dt, k = 1..n.
  Eigen::VectorXd tau_pow(n + 1);
  tau_pow[0] = 0.0;
  for (std::int64_t k = 1; k <= n; ++k) {
    tau_pow[k] = std::pow(static_cast<double>(k) * grid.dt, h2);
  }
  Eigen::MatrixXd cov(n, n);
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j <= i; ++j) {
      const double v = 0.5 * (tau_pow[i + 1] + tau_pow[j + 1] - tau_pow[i - j]);
      cov(i, j) = v;
      cov(j, i) = v;
    }
  }

  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("gen_fbm: covariance factorization failed");
  }
  const Eigen::MatrixXd factor = llt.matrixL();

  PathEnsemble out;
  out.seed = seed;
  out.label = "fbm";
  out.paths.assign(n_paths, SamplePath(grid, 1));

  parallel_for(n_paths, [&](std::int64_t i) {
    const std::uint64_t path_seed = rng::child_seed(seed, static_cast<std::uint64_t>(i));
    Eigen::VectorXd z(n);
    for (std::int64_t k = 0; k < n; ++k) {
      z[k] = rng::normal(path_seed, static_cast<std::uint64_t>(k));
    }
    Eigen::MatrixXd& vals = out.paths[i].values();
    vals.col(0).tail(n) = factor.triangularView<Eigen::Lower>() * z;
  });
  return out;
}

}  // namespace dlab
