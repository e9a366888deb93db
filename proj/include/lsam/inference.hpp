#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lsam/lsa.hpp"

namespace lsam {

enum class BlockRule { explicit_len, pow45, pow34 };

struct ObmConfig {
  BlockRule rule = BlockRule::pow45;
  long block_len = 0;  // used by explicit_len
};

// Resolves the block length against a trajectory length: ceil(n^{4/5}) or
// ceil(n^{3/4}) for the power rules, clamped (with a warning) to [2, n-1].
long resolve_block(const ObmConfig& cfg, long n);

struct ObmEstimate {
  double variance = 0.0;
  long block_len = 0;
  long n = 0;
  Vector direction;
};

// Overlapping-batch-means variance of the projected iterates:
//   b/(n-b+1) * sum_t ((mean of block t - grand mean)^T u)^2
// with all n-b+1 sliding blocks of length b. Block sums run over
// compensated prefix sums of the centered series.
ObmEstimate obm_variance(const LsaTrajectory& traj, long b_n, const Vector& u);

// Same estimator on a raw scalar series.
double obm_variance_scalar(std::span<const double> series, long b_n);

// Multiplier bootstrap statistics: each draw applies a fresh i.i.d. standard
// normal weight vector to the fixed centered block means,
//   sqrt(b)/sqrt(n-b+1) * sum_t w_t (mean_t - grand mean)^T u.
// Draw j uses a generator seeded by mix_seed(seed, j), so the output is
// deterministic for any thread count.
std::vector<double> msb_draws(const LsaTrajectory& traj, long b_n,
                              const Vector& u, long m, std::uint64_t seed,
                              unsigned threads = 1);

enum class CiMethod { analytic, monte_carlo };

// Two-sided quantile of the bootstrap statistic on the sqrt(n) scale.
struct MsbQuantile {
  double level = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  CiMethod method = CiMethod::analytic;
  long mc_draws = 0;
};

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 0.0;
  MsbQuantile quantile;
};

// Interval for u^T theta_star centered at u^T pr_average. The analytic path
// uses the exact conditional-Gaussian quantile of the bootstrap statistic;
// the draw-based path uses the empirical two-sided quantile of |draws| from
// msb_draws.
ConfidenceInterval confidence_interval_analytic(const Vector& pr_average,
                                                const ObmEstimate& est,
                                                const Vector& u, double level);
ConfidenceInterval confidence_interval_from_draws(const Vector& pr_average,
                                                  const ObmEstimate& est,
                                                  const Vector& u,
                                                  double level,
                                                  std::span<const double> draws);

// Oracle diagnostic: the same batch-means estimator applied to the
// transformed noise sequence u^T a_bar^{-1} eps(Z_l) along a recorded
// observation path.
double obm_noise_variance(const LsaInstance& inst, const GroundTruth& gt,
                          std::span<const std::int32_t> z_path, long b_n,
                          const Vector& u);

// Two-sided Kolmogorov distance between the empirical law of a sorted
// sample and N(0, sigma^2).
double kolmogorov_distance(std::span<const double> sorted_samples,
                           double sigma);

struct IntervalRecord {
  double lo = 0.0;
  double hi = 0.0;
  double truth = 0.0;
};

struct CoverageResult {
  double rate = 0.0;
  double stderr_ = 0.0;
};

CoverageResult coverage(std::span<const IntervalRecord> results);

}  // namespace lsam
