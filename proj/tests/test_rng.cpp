#include <cmath>
#include <vector>

#include "dlab/rng.hpp"
#include "doctest.h"

using namespace dlab;

namespace {
double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
}  // namespace

TEST_CASE("inverse normal cdf hits reference quantiles") {
  CHECK(rng::inverse_normal_cdf(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(rng::inverse_normal_cdf(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(rng::inverse_normal_cdf(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-12));
  CHECK(rng::inverse_normal_cdf(0.841344746068543) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::isfinite(rng::inverse_normal_cdf(1e-300)));
  CHECK_THROWS_AS(rng::inverse_normal_cdf(0.0), std::invalid_argument);
  CHECK_THROWS_AS(rng::inverse_normal_cdf(1.0), std::invalid_argument);
}

TEST_CASE("inverse normal cdf round trips through the cdf") {
  for (double p = 1e-10; p < 1.0; p += 0.0317) {
    const double x = rng::inverse_normal_cdf(p);
    CHECK(normal_cdf(x) == doctest::Approx(p).epsilon(1e-11));
  }
}

TEST_CASE("counter-based stream is deterministic and well distributed") {
  const std::uint64_t seed = rng::child_seed(42, 7);
  CHECK(seed == rng::child_seed(42, 7));
  CHECK(seed != rng::child_seed(42, 8));
  CHECK(seed != rng::child_seed(43, 7));

  const int n = 200000;
  double sum = 0, sum2 = 0, sum3 = 0, sum4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng::normal(seed, i);
    sum += z;
    sum2 += z * z;
    sum3 += z * z * z;
    sum4 += z * z * z * z;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(double(n)));
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::abs(sum3 / n) < 0.05);
  CHECK(sum4 / n == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("uniform01 stays strictly inside the open interval") {
  for (int i = 0; i < 10000; ++i) {
    const double u = rng::uniform01(123, i);
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}
