#include "lsam/inference.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

#include "lsam/errors.hpp"
#include "lsam/parallel.hpp"
#include "lsam/rng.hpp"
#include "lsam/stats.hpp"

namespace lsam {
namespace {

void require_unit(const Vector& u, const char* where) {
  if (std::abs(u.norm() - 1.0) > 1e-10) {
    throw InvalidArgumentError(std::string(where) +
                               ": direction must be a unit vector");
  }
}

long ceil_power(long n, double exponent) {
  const double x = std::pow(double(n), exponent);
  const double r = std::round(x);
  // n^p can land a hair above an exact integer; absorb that before ceil.
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, r)) {
    return static_cast<long>(r);
  }
  return static_cast<long>(std::ceil(x));
}

// Centered block means (mean of block t minus grand mean) for all
// n-b+1 sliding blocks, via compensated prefix sums.
std::vector<double> centered_block_means(std::span<const double> series,
                                         long b) {
  const long n = static_cast<long>(series.size());
  NeumaierAcc total;
  for (double x : series) total.add(x);
  const double grand_mean = total.value() / double(n);

  std::vector<double> prefix(static_cast<std::size_t>(n) + 1);
  NeumaierAcc acc;
  prefix[0] = 0.0;
  for (long i = 0; i < n; ++i) {
    acc.add(series[static_cast<std::size_t>(i)] - grand_mean);
    prefix[static_cast<std::size_t>(i) + 1] = acc.value();
  }

  std::vector<double> means(static_cast<std::size_t>(n - b + 1));
  for (long t = 0; t + b <= n; ++t) {
    means[static_cast<std::size_t>(t)] =
        (prefix[static_cast<std::size_t>(t + b)] -
         prefix[static_cast<std::size_t>(t)]) /
        double(b);
  }
  return means;
}

std::vector<double> project_iterates(const LsaTrajectory& traj,
                                     const Vector& u) {
  const long n = traj.n;
  std::vector<double> series(static_cast<std::size_t>(n));
  const int d = traj.dim();
  for (long k = 0; k < n; ++k) {
    double acc = 0.0;
    for (int j = 0; j < d; ++j) acc += traj.iterates(k, j) * u(j);
    series[static_cast<std::size_t>(k)] = acc;
  }
  return series;
}

void check_block(long b, long n, const char* where) {
  if (b < 2 || b > n - 1) {
    throw InvalidArgumentError(std::string(where) +
                               ": block length must lie in [2, n-1]");
  }
}

}  // namespace

long resolve_block(const ObmConfig& cfg, long n) {
  if (n < 4) {
    throw InvalidArgumentError("resolve_block: n must be >= 4");
  }
  long b = 0;
  switch (cfg.rule) {
    case BlockRule::explicit_len:
      b = cfg.block_len;
      break;
    case BlockRule::pow45:
      b = ceil_power(n, 0.8);
      break;
    case BlockRule::pow34:
      b = ceil_power(n, 0.75);
      break;
  }
  const long clamped = std::clamp(b, 2L, n - 1);
  if (clamped != b) {
    std::cerr << "warning: block length " << b << " clamped to " << clamped
              << " for n = " << n << "\n";
  }
  return clamped;
}

double obm_variance_scalar(std::span<const double> series, long b_n) {
  const long n = static_cast<long>(series.size());
  check_block(b_n, n, "obm_variance");
  const auto means = centered_block_means(series, b_n);
  NeumaierAcc squares;
  for (double c : means) squares.add(c * c);
  const double value =
      double(b_n) / double(n - b_n + 1) * squares.value();
  return value > 0.0 ? value : 0.0;
}

ObmEstimate obm_variance(const LsaTrajectory& traj, long b_n,
                         const Vector& u) {
  require_unit(u, "obm_variance");
  const auto series = project_iterates(traj, u);
  ObmEstimate est;
  est.variance = obm_variance_scalar(series, b_n);
  est.block_len = b_n;
  est.n = traj.n;
  est.direction = u;
  return est;
}

std::vector<double> msb_draws(const LsaTrajectory& traj, long b_n,
                              const Vector& u, long m, std::uint64_t seed,
                              unsigned threads) {
  if (m < 1) {
    throw InvalidArgumentError("msb_draws: m must be >= 1");
  }
  require_unit(u, "msb_draws");
  const auto series = project_iterates(traj, u);
  const long n = static_cast<long>(series.size());
  check_block(b_n, n, "msb_draws");
  const auto residuals = centered_block_means(series, b_n);
  const double scale = std::sqrt(double(b_n) / double(n - b_n + 1));

  std::vector<double> draws(static_cast<std::size_t>(m));
  const std::size_t blocks = residuals.size();
  const double* res = residuals.data();
  parallel_for(static_cast<std::size_t>(m), threads, [&](std::size_t j) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(j)));
    double acc = 0.0;
    for (std::size_t t = 0; t < blocks; ++t) acc += rng.normal() * res[t];
    draws[j] = scale * acc;
  });
  return draws;
}

namespace {

ConfidenceInterval package_interval(const Vector& pr_average,
                                    const ObmEstimate& est, const Vector& u,
                                    double level, double q, CiMethod method,
                                    long mc_draws) {
  const double center = u.dot(pr_average);
  const double half = q / std::sqrt(double(est.n));
  ConfidenceInterval ci;
  ci.lo = center - half;
  ci.hi = center + half;
  ci.quantile = MsbQuantile{level, -q, q, method, mc_draws};
  return ci;
}

void check_ci_args(const ObmEstimate& est, double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw InvalidArgumentError(
        "confidence_interval: level must lie in (0, 1)");
  }
  if (est.n < 4) {
    throw InvalidArgumentError("confidence_interval: estimate needs n >= 4");
  }
}

}  // namespace

ConfidenceInterval confidence_interval_analytic(const Vector& pr_average,
                                                const ObmEstimate& est,
                                                const Vector& u,
                                                double level) {
  check_ci_args(est, level);
  require_unit(u, "confidence_interval");
  const double q =
      normal_quantile(0.5 * (1.0 + level)) * std::sqrt(est.variance);
  return package_interval(pr_average, est, u, level, q, CiMethod::analytic, 0);
}

ConfidenceInterval confidence_interval_from_draws(
    const Vector& pr_average, const ObmEstimate& est, const Vector& u,
    double level, std::span<const double> draws) {
  check_ci_args(est, level);
  require_unit(u, "confidence_interval");
  if (draws.empty()) {
    throw InvalidArgumentError("confidence_interval: no bootstrap draws");
  }
  // P(|X| <= q) = level for the two-sided interval.
  std::vector<double> magnitudes(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) {
    magnitudes[i] = std::abs(draws[i]);
  }
  std::sort(magnitudes.begin(), magnitudes.end());
  const double q = quantile_sorted(magnitudes, level);
  return package_interval(pr_average, est, u, level, q, CiMethod::monte_carlo,
                          static_cast<long>(draws.size()));
}

double obm_noise_variance(const LsaInstance& inst, const GroundTruth& gt,
                          std::span<const std::int32_t> z_path, long b_n,
                          const Vector& u) {
  require_unit(u, "obm_noise_variance");
  if (z_path.empty()) {
    throw InvalidArgumentError("obm_noise_variance: empty observation path");
  }
  (void)gt;  // theta_star already folded into the noise table
  // u^T a_bar^{-1} eps(z) = (a_bar^{-T} u) . eps(z)
  const Vector v = inst.a_bar.transpose().partialPivLu().solve(u);
  std::vector<double> series(z_path.size());
  for (std::size_t i = 0; i < z_path.size(); ++i) {
    series[i] = inst.noise_table.row(z_path[i]).dot(v);
  }
  return obm_variance_scalar(series, b_n);
}

double kolmogorov_distance(std::span<const double> sorted_samples,
                           double sigma) {
  if (sorted_samples.empty()) {
    throw InvalidArgumentError("kolmogorov_distance: empty sample");
  }
  if (!(sigma > 0.0)) {
    throw InvalidArgumentError("kolmogorov_distance: sigma must be positive");
  }
  if (!std::is_sorted(sorted_samples.begin(), sorted_samples.end())) {
    throw InvalidArgumentError("kolmogorov_distance: samples must be sorted");
  }
  const auto n = static_cast<double>(sorted_samples.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < sorted_samples.size(); ++i) {
    const double cdf = normal_cdf(sorted_samples[i] / sigma);
    const double above = double(i + 1) / n - cdf;
    const double below = cdf - double(i) / n;
    worst = std::max(worst, std::max(above, below));
  }
  return std::clamp(worst, 0.0, 1.0);
}

CoverageResult coverage(std::span<const IntervalRecord> results) {
  if (results.empty()) {
    throw InvalidArgumentError("coverage: no results");
  }
  long hits = 0;
  for (const auto& r : results) {
    if (r.lo <= r.truth && r.truth <= r.hi) ++hits;
  }
  CoverageResult out;
  const double count = static_cast<double>(results.size());
  out.rate = double(hits) / count;
  out.stderr_ = std::sqrt(out.rate * (1.0 - out.rate) / count);
  return out;
}

}  // namespace lsam
