#include "dlab/sde.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "dlab/errors.hpp"
#include "dlab/parallel.hpp"

namespace dlab {

SdeSpec SdeSpec::from_fields(int state_dim, int noise_dim,
                             std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)> b,
                             DiffusionFn sigma) {
  SdeSpec spec;
  spec.state_dim = state_dim;
  spec.noise_dim = noise_dim;
  spec.drift = [b = std::move(b)](double s, const Eigen::VectorXd& x, const HistoryView&) {
    return b(s, x);
  };
  spec.diffusion = std::move(sigma);
  return spec;
}

SamplePath euler_maruyama_path(const TimeGrid& grid, const SdeSpec& sde,
                               const Eigen::VectorXd& x0, const SamplePath& noise,
                               std::int64_t path_index) {
  if (noise.dim() != sde.noise_dim) {
    throw std::invalid_argument("euler_maruyama: noise dim must equal the spec's noise_dim");
  }
  if (!(noise.grid() == grid)) {
    throw std::invalid_argument("euler_maruyama: noise grid must equal the integration grid");
  }
  if (x0.size() != sde.state_dim) {
    throw std::invalid_argument("euler_maruyama: x0 has wrong dimension");
  }

  SamplePath out(grid, sde.state_dim);
  out.values().row(0) = x0.transpose();
  Eigen::VectorXd x = x0;
  for (std::int64_t k = 0; k < grid.n_steps; ++k) {
    const double s = grid.time_at(k);
    const HistoryView history(out, k);
    const Eigen::VectorXd bv = sde.drift(s, x, history);
    const Eigen::MatrixXd sv = sde.diffusion(s, x);
    const Eigen::VectorXd dw =
        (noise.values().row(k + 1) - noise.values().row(k)).transpose();
    x += bv * grid.dt + sv * dw;
    if (!x.allFinite()) {
      throw BlowupError("euler_maruyama: non-finite state", path_index, k + 1);
    }
    out.values().row(k + 1) = x.transpose();
  }
  return out;
}

PathEnsemble euler_maruyama(const TimeGrid& grid, const SdeSpec& sde,
                            const Eigen::VectorXd& x0, const PathEnsemble& noise) {
  noise.validate();
  PathEnsemble out;
  out.seed = noise.seed;
  out.label = "euler";
  out.paths.assign(noise.paths.size(), SamplePath());
  parallel_for(noise.size(), [&](std::int64_t i) {
    out.paths[i] = euler_maruyama_path(grid, sde, x0, noise.paths[i], i);
  });
  return out;
}

SamplePath first_variation(const TimeGrid& grid, const SdeSpec& sde,
                           const SamplePath& x_path, const SamplePath& noise) {
  if (!sde.drift_jacobian || !sde.diffusion_jacobian) {
    throw UnsupportedError("first_variation: spec lacks derivative callbacks");
  }
  if (!(x_path.grid() == grid) || !(noise.grid() == grid)) {
    throw std::invalid_argument("first_variation: paths must share the grid");
  }
  const int d = sde.state_dim;
  const int m = sde.noise_dim;

  SamplePath out(grid, d * d);
  Eigen::MatrixXd z = Eigen::MatrixXd::Identity(d, d);
  auto flatten = [&](const Eigen::MatrixXd& mat, std::int64_t row) {
    for (int i = 0; i < d; ++i)
      for (int l = 0; l < d; ++l) out.at(row, i * d + l) = mat(i, l);
  };
  flatten(z, 0);

  for (std::int64_t k = 0; k < grid.n_steps; ++k) {
    const double s = grid.time_at(k);
    const Eigen::VectorXd x = x_path.values().row(k).transpose();
    const Eigen::MatrixXd jb = sde.drift_jacobian(s, x);
    const std::vector<Eigen::MatrixXd> jsig = sde.diffusion_jacobian(s, x);
    if (static_cast<int>(jsig.size()) != d) {
      throw std::invalid_argument("first_variation: diffusion_jacobian must return d matrices");
    }
    const Eigen::VectorXd dw =
        (noise.values().row(k + 1) - noise.values().row(k)).transpose();

    Eigen::MatrixXd incr = jb * z * grid.dt;
    for (int j = 0; j < m; ++j) {
      // dsig_j(i,l) = d sigma_ij / d x_l
      Eigen::MatrixXd dsig_j(d, d);
      for (int l = 0; l < d; ++l) dsig_j.col(l) = jsig[l].col(j);
      incr += dsig_j * z * dw[j];
    }
    z += incr;
    if (!z.allFinite()) {
      throw BlowupError("first_variation: non-finite state", 0, k + 1);
    }
    flatten(z, k + 1);
  }
  return out;
}

}  // namespace dlab
