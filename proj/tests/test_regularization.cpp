#include <cmath>

#include "dlab/errors.hpp"
#include "dlab/generators.hpp"
#include "dlab/regularization.hpp"
#include "dlab/rng.hpp"
#include "doctest.h"

using namespace dlab;

namespace {

// Literal transcription of the defining Riemann sums, kept separate from
// the library path as an oracle.
double forward_integral_naive(const SamplePath& Y, const SamplePath& X, int m,
                              std::int64_t j) {
  const auto n = X.n_steps();
  double acc = 0.0;
  for (std::int64_t k = 0; k < j; ++k) {
    double dot = 0.0;
    for (int c = 0; c < X.dim(); ++c) {
      const auto kf = std::min<std::int64_t>(k + m, n);
      dot += Y.at(k, c) * (X.at(kf, c) - X.at(k, c));
    }
    acc += dot / (m * X.grid().dt) * X.grid().dt;
  }
  return acc;
}

SamplePath line_path(const TimeGrid& g) {
  SamplePath p(g, 1);
  for (std::int64_t k = 0; k <= g.n_steps; ++k) p.at(k) = g.time_at(k);
  return p;
}

}  // namespace

TEST_CASE("eps schedule invariants") {
  CHECK_NOTHROW(EpsSchedule({64, 32, 16, 8, 4}));
  CHECK_THROWS_AS(EpsSchedule({64, 32}), std::invalid_argument);
  CHECK_THROWS_AS(EpsSchedule({4, 8, 16}), std::invalid_argument);
  CHECK_THROWS_AS(EpsSchedule({16, 8, 0}), std::invalid_argument);
  CHECK(EpsSchedule::default_schedule().smallest() == 4);
}

TEST_CASE("forward integral matches the defining sum and starts at zero") {
  const TimeGrid g = make_grid(0.0, 1.0, 256);
  const PathEnsemble ens = gen_brownian(g, 1, 2, 101);
  const SamplePath& w = ens.paths[0];
  const SamplePath& y = ens.paths[1];
  const SamplePath f = forward_integral_eps(y, w, 8);
  CHECK(f.at(0) == 0.0);
  for (std::int64_t j : {1L, 17L, 128L, 256L}) {
    CHECK(f.at(j) == doctest::Approx(forward_integral_naive(y, w, 8, j)).epsilon(1e-12));
  }
}

TEST_CASE("forward integral of a constant integrand telescopes") {
  const TimeGrid g = make_grid(0.0, 1.0, 512);
  const PathEnsemble ens = gen_brownian(g, 1, 1, 7);
  const SamplePath& w = ens.paths[0];
  SamplePath c(g, 1);
  c.values().setConstant(3.0);
  const int m = 8;
  const SamplePath f = forward_integral_eps(c, w, m);
  // c*(W_s - W_t0) up to the oscillation of W over one eps window.
  double osc = 0.0;
  for (std::int64_t k = 0; k + m <= 512; ++k) {
    for (int j = 1; j <= m; ++j) osc = std::max(osc, std::abs(w.at(k + j) - w.at(k)));
  }
  for (std::int64_t j : {64L, 256L, 512L}) {
    CHECK(std::abs(f.at(j) - 3.0 * (w.at(j) - w.at(0))) <= 3.0 * osc + 1e-12);
  }
}

TEST_CASE("forward integral against a bounded variation path is a Lebesgue integral") {
  const TimeGrid g = make_grid(0.0, 1.0, 2048);
  const PathEnsemble ens = gen_brownian(g, 1, 1, 23);
  const SamplePath& w = ens.paths[0];
  const SamplePath x = line_path(g);
  // Left-point quadrature of int W_r dr as the oracle.
  double lebesgue = 0.0;
  for (std::int64_t k = 0; k < 2048; ++k) lebesgue += w.at(k) * g.dt;

  double prev_err = 1e9;
  for (int m : {64, 16, 4}) {
    const SamplePath f = forward_integral_eps(w, x, m);
    // Constant extension flattens X near T, so compare away from the edge.
    const std::int64_t j = 2048 - 64;
    double leb_j = 0.0;
    for (std::int64_t k = 0; k < j; ++k) leb_j += w.at(k) * g.dt;
    const double err = std::abs(f.at(j) - leb_j);
    CHECK(err < prev_err + 1e-3);
    prev_err = err;
  }
  const SamplePath f4 = forward_integral_eps(w, x, 4);
  CHECK(std::abs(f4.at(2048 - 64) - (lebesgue - [&] {
          double tail = 0.0;
          for (std::int64_t k = 2048 - 64; k < 2048; ++k) tail += w.at(k) * g.dt;
          return tail;
        }())) < 0.01);
}

TEST_CASE("forward integral of W against W approaches the Ito value") {
  const TimeGrid g = make_grid(0.0, 1.0, 4096);
  const std::int64_t m = 64;
  const PathEnsemble ens = gen_brownian(g, 1, m, 99);
  double rms = 0.0;
  for (const auto& w : ens.paths) {
    const SamplePath f = forward_integral_eps(w, w, 4);
    const double ito = (w.at(4096) * w.at(4096) - 1.0) / 2.0;
    rms += (f.at(4096) - ito) * (f.at(4096) - ito);
  }
  rms = std::sqrt(rms / double(m));
  CHECK(rms < 0.05);
}

TEST_CASE("forward integral rejects mismatched inputs") {
  const TimeGrid g = make_grid(0.0, 1.0, 16);
  const TimeGrid g2 = make_grid(0.0, 1.0, 32);
  SamplePath a(g, 1), b(g2, 1), c(g, 2);
  CHECK_THROWS_AS(forward_integral_eps(a, b, 2), std::invalid_argument);
  CHECK_THROWS_AS(forward_integral_eps(a, c, 2), std::invalid_argument);
  CHECK_THROWS_AS(forward_integral_eps(a, a, 0), std::invalid_argument);
}

TEST_CASE("bracket of brownian motion approximates the identity in time") {
  const TimeGrid g = make_grid(0.0, 1.0, 4096);
  const PathEnsemble ens = gen_brownian(g, 1, 64, 12);
  double worst = 0.0;
  for (const auto& w : ens.paths) {
    const BracketPath b = bracket_eps(w, w, 4);
    (void)b;
  }
  // ensemble mean at a few times
  for (std::int64_t j : {1024L, 2048L, 4096L}) {
    double mean = 0.0;
    for (const auto& w : ens.paths) mean += bracket_eps(w, w, 4).scalar(j);
    mean /= 64.0;
    worst = std::max(worst, std::abs(mean - g.time_at(j)));
  }
  CHECK(worst < 0.02);
}

TEST_CASE("bracket of independent components vanishes") {
  const TimeGrid g = make_grid(0.0, 1.0, 4096);
  const PathEnsemble ens = gen_brownian(g, 2, 64, 314);
  double mean = 0.0;
  for (const auto& w : ens.paths) {
    const BracketPath b = bracket_eps(w, w, 4);
    mean += b.entry(4096, 0, 1);
    CHECK(b.entry(4096, 0, 1) == b.entry(4096, 1, 0));
  }
  CHECK(std::abs(mean / 64.0) < 0.02);
}

TEST_CASE("bracket invariants: zero start, symmetric, nondecreasing diagonal") {
  const TimeGrid g = make_grid(0.0, 1.0, 512);
  const PathEnsemble ens = gen_brownian(g, 2, 4, 2222);
  for (const auto& w : ens.paths) {
    const BracketPath b = bracket_eps(w, w, 8);
    CHECK(b.entry(0, 0, 0) == 0.0);
    CHECK(b.entry(0, 1, 0) == 0.0);
    for (std::int64_t k = 0; k < 512; ++k) {
      CHECK(b.entry(k + 1, 0, 0) >= b.entry(k, 0, 0));
      CHECK(b.entry(k + 1, 1, 1) >= b.entry(k, 1, 1));
      CHECK(b.entry(k, 0, 1) == b.entry(k, 1, 0));
    }
  }
}

TEST_CASE("bracket and forward integral are exactly bilinear") {
  const TimeGrid g = make_grid(0.0, 1.0, 128);
  const PathEnsemble ens = gen_brownian(g, 1, 3, 404);
  const SamplePath& x = ens.paths[0];
  const SamplePath& y = ens.paths[1];
  const SamplePath& z = ens.paths[2];
  const double a = 1.7, c = -0.4;

  SamplePath combo(g, 1);
  combo.values() = a * x.values() + c * y.values();

  const BracketPath bc = bracket_eps(combo, z, 8);
  const BracketPath bx = bracket_eps(x, z, 8);
  const BracketPath by = bracket_eps(y, z, 8);
  const SamplePath fc = forward_integral_eps(combo, z, 8);
  const SamplePath fx = forward_integral_eps(x, z, 8);
  const SamplePath fy = forward_integral_eps(y, z, 8);
  for (std::int64_t k = 0; k <= 128; k += 16) {
    CHECK(bc.scalar(k) ==
          doctest::Approx(a * bx.scalar(k) + c * by.scalar(k)).epsilon(1e-12));
    CHECK(fc.at(k) == doctest::Approx(a * fx.at(k) + c * fy.at(k)).epsilon(1e-12));
  }
}

TEST_CASE("fbm with H=0.75 has vanishing quadratic variation") {
  const TimeGrid g = make_grid(0.0, 1.0, 1024);
  const PathEnsemble ens = gen_fbm(g, 0.75, 32, 8);
  double prev = 1e18;
  for (int m : {64, 16, 4, 1}) {
    double mean = 0.0;
    for (const auto& x : ens.paths) mean += bracket_eps(x, x, m).scalar(1024);
    mean /= 32.0;
    CHECK(mean < prev);
    prev = mean;
  }
  CHECK(prev < 0.05);
}

TEST_CASE("ito integral telescopes for a unit integrand") {
  const TimeGrid g = make_grid(0.0, 1.0, 64);
  const PathEnsemble ens = gen_brownian(g, 1, 1, 6);
  const SamplePath& w = ens.paths[0];
  SamplePath ones(g, 1);
  ones.values().setOnes();
  const SamplePath i = ito_integral(ones, w);
  for (std::int64_t k = 0; k <= 64; ++k) {
    CHECK(i.at(k) == doctest::Approx(w.at(k) - w.at(0)).epsilon(1e-13));
  }
}

TEST_CASE("ito identity error shrinks with dt") {
  double errs[2];
  int idx = 0;
  for (std::int64_t n : {512L, 4096L}) {
    const TimeGrid g = make_grid(0.0, 1.0, n);
    const PathEnsemble ens = gen_brownian(g, 1, 64, 55);
    double rms = 0.0;
    for (const auto& w : ens.paths) {
      const SamplePath i = ito_integral(w, w);
      const double ref = (w.at(n) * w.at(n) - 1.0) / 2.0;
      rms += (i.at(n) - ref) * (i.at(n) - ref);
    }
    errs[idx++] = std::sqrt(rms / 64.0);
  }
  CHECK(errs[1] < errs[0]);
  CHECK(errs[1] < 0.05);
}

TEST_CASE("left-point vs trapezoid quadrature differ at order dt") {
  const TimeGrid g = make_grid(0.0, 1.0, 1024);
  const PathEnsemble ens = gen_brownian(g, 1, 1, 21);
  const SamplePath& w = ens.paths[0];
  const SamplePath x = line_path(g);
  const SamplePath left = ito_integral(w, x);
  double trap = 0.0;
  for (std::int64_t k = 0; k < 1024; ++k) trap += 0.5 * (w.at(k) + w.at(k + 1)) * g.dt;
  CHECK(std::abs(left.at(1024) - trap) < 5.0 * std::sqrt(g.dt) * g.dt * 32);
  CHECK(std::abs(left.at(1024) - trap) > 0.0);
}

TEST_CASE("limit analysis: constant estimator converges with zero spread") {
  const LimitReport rep = analyze_limit({4, 2, 1}, {0.7, 0.7, 0.7}, 0.01);
  CHECK(rep.converged);
  CHECK(rep.spread == 0.0);
  CHECK(rep.monotone);
  CHECK(rep.limit == 0.7);
}

TEST_CASE("limit analysis: linear-in-eps estimator") {
  const EpsSchedule sched({64, 32, 16, 8, 4});
  const double dt = 1.0 / 4096.0;
  const LimitReport rep = limit_estimate(
      [dt](int m) { return m * dt; }, sched, dt, 8.0 * dt);
  CHECK(rep.rate == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.monotone);
  // finest gap is (8-4)*dt = 4*dt <= tol = 8*dt
  CHECK(rep.converged);
  const LimitReport tight = limit_estimate(
      [dt](int m) { return m * dt; }, sched, dt, 2.0 * dt);
  CHECK_FALSE(tight.converged);
}

TEST_CASE("limit analysis: richardson correction recovers a power-law limit") {
  // est = L + C * eps
  const double L = 0.3, C = 2.0;
  std::vector<double> params{0.8, 0.4, 0.2, 0.1};
  std::vector<double> est;
  for (double p : params) est.push_back(L + C * p);
  const LimitReport rep = analyze_limit(params, est, 1.0, true);
  CHECK(rep.limit == doctest::Approx(L).epsilon(1e-10));
  const LimitReport plain = analyze_limit(params, est, 1.0, false);
  CHECK(plain.limit == doctest::Approx(L + C * 0.1).epsilon(1e-12));
}

TEST_CASE("limit analysis rejects non-finite estimates") {
  CHECK_THROWS_AS(analyze_limit({4, 2, 1}, {1.0, std::nan(""), 0.5}, 0.1), NumericalError);
}
