#include <cmath>
#include <cstdio>
#include <filesystem>

#include "dlab/errors.hpp"
#include "dlab/generators.hpp"
#include "dlab/parallel.hpp"
#include "dlab/sample_path.hpp"
#include "dlab/sde.hpp"
#include "dlab/time_grid.hpp"
#include "doctest.h"

using namespace dlab;

TEST_CASE("make_grid produces the uniform grid") {
  const TimeGrid g = make_grid(0.0, 1.0, 4);
  CHECK(g.dt == doctest::Approx(0.25));
  CHECK(g.time_at(0) == 0.0);
  CHECK(g.time_at(2) == doctest::Approx(0.5));
  CHECK(g.time_at(4) == doctest::Approx(1.0));
  CHECK(g.dt * g.n_steps == doctest::Approx(g.T - g.t0).epsilon(1e-15));

  CHECK(make_grid(0.5, 1.5, 1000).dt == doctest::Approx(0.001));

  CHECK_THROWS_AS(make_grid(0.0, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(1.0, 1.0, 8), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(2.0, 1.0, 8), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(0.0, std::nan(""), 8), std::invalid_argument);
}

TEST_CASE("constant extension beyond the interval") {
  const TimeGrid g = make_grid(0.0, 1.0, 8);
  SamplePath p(g, 1);
  for (std::int64_t k = 0; k <= 8; ++k) p.at(k) = double(k);
  CHECK(p.value_at_time(2.0)[0] == 8.0);
  CHECK(p.value_at_time(-1.0)[0] == 0.0);
  CHECK(p.state_extended(100)[0] == 8.0);
  CHECK(p.state_extended(-3)[0] == 0.0);
}

TEST_CASE("brownian ensemble statistics and determinism") {
  const TimeGrid g = make_grid(0.0, 1.0, 64);
  const std::int64_t m = 10000;
  const PathEnsemble ens = gen_brownian(g, 1, m, 2024);

  double mean_wt = 0, mean_wt2 = 0;
  for (const auto& p : ens.paths) {
    mean_wt += p.at(64);
    mean_wt2 += p.at(64) * p.at(64);
  }
  mean_wt /= double(m);
  mean_wt2 /= double(m);
  CHECK(std::abs(mean_wt) < 3.0 * std::sqrt(1.0 / double(m)));
  // Var(W_1^2) = 2, so stderr of the second moment is sqrt(2/m).
  CHECK(std::abs(mean_wt2 - 1.0) < 3.0 * std::sqrt(2.0 / double(m)));

  const PathEnsemble again = gen_brownian(g, 1, m, 2024);
  bool identical = true;
  for (std::int64_t i = 0; i < m && identical; ++i) {
    identical = ens.paths[i].values() == again.paths[i].values();
  }
  CHECK(identical);
}

TEST_CASE("generation is independent of the thread count") {
  const TimeGrid g = make_grid(0.0, 1.0, 128);
  const int saved = num_threads();
  set_num_threads(1);
  const PathEnsemble serial = gen_brownian(g, 2, 37, 99);
  set_num_threads(7);
  const PathEnsemble threaded = gen_brownian(g, 2, 37, 99);
  set_num_threads(saved);
  for (std::int64_t i = 0; i < 37; ++i) {
    CHECK(serial.paths[i].values() == threaded.paths[i].values());
  }
}

TEST_CASE("brownian increments pass the variance band") {
  const TimeGrid g = make_grid(0.0, 1.0, 256);
  const std::int64_t m = 64;
  const PathEnsemble ens = gen_brownian(g, 1, m, 5);
  double s2 = 0;
  for (const auto& p : ens.paths) {
    for (std::int64_t k = 0; k < g.n_steps; ++k) {
      const double d = p.at(k + 1) - p.at(k);
      s2 += d * d;
    }
  }
  const double ratio = s2 / (double(m * g.n_steps) * g.dt);
  const double band = 5.0 / std::sqrt(double(m * g.n_steps));
  CHECK(ratio > 1.0 - band);
  CHECK(ratio < 1.0 + band);
}

TEST_CASE("fbm matches brownian scale at H=1/2 and unit variance at T=1") {
  const TimeGrid g = make_grid(0.0, 1.0, 256);
  const std::int64_t m = 4000;

  for (double hurst : {0.5, 0.75}) {
    const PathEnsemble ens = gen_fbm(g, hurst, m, 31);
    double v = 0;
    for (const auto& p : ens.paths) v += p.at(256) * p.at(256);
    v /= double(m);
    // Var X_1 = 1 for both; Var(X_1^2) = 2.
    CHECK(std::abs(v - 1.0) < 3.0 * std::sqrt(2.0 / double(m)));
  }

  CHECK_THROWS_AS(gen_fbm(g, 0.0, 4, 1), std::invalid_argument);
  CHECK_THROWS_AS(gen_fbm(g, 1.0, 4, 1), std::invalid_argument);
  CHECK_THROWS_AS(gen_fbm(make_grid(0, 1, 1 << 15), 0.5, 1, 1), std::invalid_argument);
}

TEST_CASE("euler identity sde reproduces the shifted noise") {
  const TimeGrid g = make_grid(0.0, 1.0, 32);
  const PathEnsemble noise = gen_brownian(g, 1, 5, 77);
  SdeSpec sde = SdeSpec::from_fields(
      1, 1, [](double, const Eigen::VectorXd& x) { return Eigen::VectorXd::Zero(x.size()); },
      [](double, const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(1, 1); });
  Eigen::VectorXd x0(1);
  x0 << 2.5;
  const PathEnsemble xs = euler_maruyama(g, sde, x0, noise);
  for (std::int64_t i = 0; i < 5; ++i) {
    for (std::int64_t k = 0; k <= 32; ++k) {
      CHECK(xs.paths[i].at(k) == doctest::Approx(2.5 + noise.paths[i].at(k)).epsilon(1e-14));
    }
  }
}

TEST_CASE("euler with zero diffusion is the explicit euler ode") {
  const TimeGrid g = make_grid(0.0, 1.0, 1000);
  const PathEnsemble noise = gen_brownian(g, 1, 1, 7);
  SdeSpec sde = SdeSpec::from_fields(
      1, 1, [](double, const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); },
      [](double, const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(1, 1); });
  Eigen::VectorXd x0(1);
  x0 << 1.0;
  const SamplePath x = euler_maruyama_path(g, sde, x0, noise.paths[0]);
  // Exact explicit-Euler recursion, and O(dt) from e^{-T}.
  double ref = 1.0;
  for (int k = 0; k < 1000; ++k) ref *= (1.0 - g.dt);
  CHECK(x.at(1000) == doctest::Approx(ref).epsilon(1e-13));
  CHECK(std::abs(x.at(1000) - std::exp(-1.0)) < 2.0 * g.dt);
}

TEST_CASE("ou ensemble mean matches the closed form") {
  const double kappa = 1.0;
  const TimeGrid g = make_grid(0.0, 1.0, 512);
  const std::int64_t m = 4000;
  const PathEnsemble noise = gen_brownian(g, 1, m, 2718);
  SdeSpec sde = SdeSpec::from_fields(
      1, 1, [kappa](double, const Eigen::VectorXd& x) { return Eigen::VectorXd(-kappa * x); },
      [](double, const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(1, 1); });
  Eigen::VectorXd x0(1);
  x0 << 1.0;
  const PathEnsemble xs = euler_maruyama(g, sde, x0, noise);
  double mean = 0;
  for (const auto& p : xs.paths) mean += p.at(512);
  mean /= double(m);
  // Var X_T = (1-e^{-2})/2 ~ 0.432.
  const double tol = 3.0 * std::sqrt(0.433 / double(m)) + 2.0 * g.dt;
  CHECK(std::abs(mean - std::exp(-kappa)) < tol);
}

TEST_CASE("blow-up aborts with the first bad step") {
  const TimeGrid g = make_grid(0.0, 1.0, 16);
  const PathEnsemble noise = gen_brownian(g, 1, 1, 1);
  SdeSpec sde = SdeSpec::from_fields(
      1, 1,
      [](double, const Eigen::VectorXd& x) {
        return Eigen::VectorXd(1e308 * (x.array() + 1.0).matrix());
      },
      [](double, const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(1, 1); });
  Eigen::VectorXd x0(1);
  x0 << 1.0;
  try {
    euler_maruyama_path(g, sde, x0, noise.paths[0]);
    FAIL("expected BlowupError");
  } catch (const BlowupError& e) {
    CHECK(e.step >= 1);
    CHECK(e.step <= 3);
  }
}

TEST_CASE("history-dependent drift sees only the adapted past") {
  const TimeGrid g = make_grid(0.0, 1.0, 8);
  const PathEnsemble noise = gen_brownian(g, 1, 1, 3);
  SdeSpec sde;
  sde.state_dim = 1;
  sde.noise_dim = 1;
  sde.drift = [](double, const Eigen::VectorXd& x, const HistoryView& hist) {
    // Running maximum drift: reads the whole past, future reads clamp.
    double running = x[0];
    for (std::int64_t k = 0; k <= hist.current_step(); ++k) {
      running = std::max(running, hist.state(k)[0]);
    }
    CHECK(hist.state(hist.current_step() + 5)[0] ==
          hist.state(hist.current_step())[0]);
    return Eigen::VectorXd::Constant(1, running);
  };
  sde.diffusion = [](double, const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(1, 1); };
  Eigen::VectorXd x0(1);
  x0 << 0.0;
  const SamplePath x = euler_maruyama_path(g, sde, x0, noise.paths[0]);
  CHECK(x.all_finite());
}

TEST_CASE("first variation: constant coefficients give the identity") {
  const TimeGrid g = make_grid(0.0, 1.0, 32);
  const PathEnsemble noise = gen_brownian(g, 1, 1, 11);
  SdeSpec sde = SdeSpec::from_fields(
      1, 1, [](double, const Eigen::VectorXd& x) { return Eigen::VectorXd::Zero(x.size()); },
      [](double, const Eigen::VectorXd&) { return 0.7 * Eigen::MatrixXd::Identity(1, 1); });
  sde.drift_jacobian = [](double, const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(1, 1); };
  sde.diffusion_jacobian = [](double, const Eigen::VectorXd&) {
    return std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Zero(1, 1)};
  };
  Eigen::VectorXd x0(1);
  x0 << 0.0;
  const SamplePath x = euler_maruyama_path(g, sde, x0, noise.paths[0]);
  const SamplePath z = first_variation(g, sde, x, noise.paths[0]);
  for (std::int64_t k = 0; k <= 32; ++k) CHECK(z.at(k) == 1.0);
}

TEST_CASE("first variation: ou flow derivative is deterministic") {
  const double kappa = 0.8;
  const TimeGrid g = make_grid(0.0, 1.0, 2000);
  const PathEnsemble noise = gen_brownian(g, 1, 1, 13);
  SdeSpec sde = SdeSpec::from_fields(
      1, 1, [kappa](double, const Eigen::VectorXd& x) { return Eigen::VectorXd(-kappa * x); },
      [](double, const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(1, 1); });
  sde.drift_jacobian = [kappa](double, const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Constant(1, 1, -kappa);
  };
  sde.diffusion_jacobian = [](double, const Eigen::VectorXd&) {
    return std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Zero(1, 1)};
  };
  Eigen::VectorXd x0(1);
  x0 << 1.0;
  const SamplePath x = euler_maruyama_path(g, sde, x0, noise.paths[0]);
  const SamplePath z = first_variation(g, sde, x, noise.paths[0]);
  CHECK(z.at(2000) == doctest::Approx(std::exp(-kappa)).epsilon(2e-3));
}

TEST_CASE("first variation: linear diffusion gives X/x0") {
  const TimeGrid g = make_grid(0.0, 1.0, 500);
  const PathEnsemble noise = gen_brownian(g, 1, 3, 17);
  SdeSpec sde = SdeSpec::from_fields(
      1, 1, [](double, const Eigen::VectorXd& x) { return Eigen::VectorXd::Zero(x.size()); },
      [](double, const Eigen::VectorXd& x) { return Eigen::MatrixXd::Constant(1, 1, x[0]); });
  sde.drift_jacobian = [](double, const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(1, 1); };
  sde.diffusion_jacobian = [](double, const Eigen::VectorXd&) {
    return std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Identity(1, 1)};
  };
  const double x0v = 2.0;
  Eigen::VectorXd x0(1);
  x0 << x0v;
  for (const auto& w : noise.paths) {
    const SamplePath x = euler_maruyama_path(g, sde, x0, w);
    const SamplePath z = first_variation(g, sde, x, w);
    // Z and X satisfy the same linear recursion, so Z = X/x0 exactly.
    for (std::int64_t k = 0; k <= 500; k += 100) {
      CHECK(z.at(k) == doctest::Approx(x.at(k) / x0v).epsilon(1e-12));
    }
  }
}

TEST_CASE("first variation requires derivative callbacks") {
  const TimeGrid g = make_grid(0.0, 1.0, 8);
  const PathEnsemble noise = gen_brownian(g, 1, 1, 1);
  SdeSpec sde = SdeSpec::from_fields(
      1, 1, [](double, const Eigen::VectorXd& x) { return Eigen::VectorXd::Zero(x.size()); },
      [](double, const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(1, 1); });
  CHECK_THROWS_AS(first_variation(g, sde, noise.paths[0], noise.paths[0]), UnsupportedError);
}

TEST_CASE("ensemble round trips through csv and binary") {
  namespace fs = std::filesystem;
  const TimeGrid g = make_grid(0.25, 1.25, 16);
  PathEnsemble ens = gen_brownian(g, 2, 3, 55);
  ens.label = "roundtrip";

  const std::string bin = (fs::temp_directory_path() / "dlab_test_ens.bin").string();
  write_binary(ens, bin);
  const PathEnsemble back = read_binary(bin);
  CHECK(back.seed == ens.seed);
  CHECK(back.label == ens.label);
  CHECK(back.size() == ens.size());
  REQUIRE(back.grid() == ens.grid());
  for (std::int64_t i = 0; i < ens.size(); ++i) {
    CHECK(back.paths[i].values() == ens.paths[i].values());
  }

  const std::string csv = (fs::temp_directory_path() / "dlab_test_ens.csv").string();
  write_csv(ens, csv);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "path_id,step,s,x_1,x_2");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == std::size_t(3 * 17));
  fs::remove(bin);
  fs::remove(csv);
}
