#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "lsam/errors.hpp"
#include "lsam/rng.hpp"
#include "lsam/stats.hpp"

using namespace lsam;

TEST_CASE("mix_seed separates nearby inputs") {
  CHECK(mix_seed(0, 0) != mix_seed(0, 1));
  CHECK(mix_seed(0, 1) != mix_seed(1, 0));
  CHECK(mix_seed(1, 2, 3) != mix_seed(1, 3, 2));
  CHECK(mix_seed(42, 7) == mix_seed(42, 7));
}

TEST_CASE("uniform draws stay in range and reproduce") {
  Rng a(123);
  Rng b(123);
  for (int i = 0; i < 1000; ++i) {
    const double x = a.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    CHECK(x == b.uniform());
  }
  Rng c(124);
  CHECK(Rng(123).next_u64() != c.next_u64());
}

TEST_CASE("normal sampler matches the standard normal law") {
  const int n = 2'000'000;
  Rng rng(2024);
  double sum = 0.0;
  double sum2 = 0.0;
  double sum3 = 0.0;
  std::vector<double> sample(100'000);
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sum2 += x * x;
    sum3 += x * x * x;
    if (i < static_cast<int>(sample.size())) sample[i] = x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(double(n)));
  CHECK(std::abs(var - 1.0) < 0.005);
  CHECK(std::abs(sum3 / n) < 0.01);

  std::sort(sample.begin(), sample.end());
  double ks = 0.0;
  const double m = double(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double cdf = normal_cdf(sample[i]);
    ks = std::max(ks, std::max(double(i + 1) / m - cdf, cdf - double(i) / m));
  }
  // 1e-3 critical value at this sample size
  CHECK(ks < 1.9495 / std::sqrt(m));
}

TEST_CASE("below is unbiased enough and in range") {
  Rng rng(5);
  int counts[7] = {0};
  for (int i = 0; i < 70'000; ++i) counts[rng.below(7)]++;
  for (int c : counts) {
    CHECK(c > 9000);
    CHECK(c < 11000);
  }
}

TEST_CASE("normal_cdf hits known values") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(normal_cdf(1.959963984540054) ==
        doctest::Approx(0.975).epsilon(1e-12));
  CHECK(normal_cdf(-8.0) == doctest::Approx(6.22096057427178e-16).epsilon(1e-3));
}

TEST_CASE("normal_quantile inverts the cdf") {
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(normal_quantile(0.975) ==
        doctest::Approx(1.959963984540054).epsilon(1e-12));
  for (double p = 1e-10; p < 1.0; p = p < 0.1 ? p * 10 : p + 0.05) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK_THROWS_AS(normal_quantile(0.0), InvalidArgumentError);
  CHECK_THROWS_AS(normal_quantile(1.0), InvalidArgumentError);
}

TEST_CASE("quantile interpolates linearly") {
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  CHECK(quantile(xs, 0.0) == 1.0);
  CHECK(quantile(xs, 1.0) == 4.0);
  CHECK(quantile(xs, 0.5) == doctest::Approx(2.5));
  CHECK(median(xs) == doctest::Approx(2.5));
  const std::vector<double> odd{3.0, 1.0, 2.0};
  CHECK(median(odd) == doctest::Approx(2.0));
}

TEST_CASE("neumaier sum compensates cancellation") {
  std::vector<double> xs{1e16, 1.0, -1e16};
  CHECK(neumaier_sum(xs) == doctest::Approx(1.0));
}
