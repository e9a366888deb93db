#include "lsam/lsa.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "lsam/errors.hpp"
#include "lsam/rng.hpp"
#include "lsam/stats.hpp"

static_assert(std::endian::native == std::endian::little,
              "trajectory files assume a little-endian host");

namespace lsam {
namespace {

constexpr double kDivergenceBound = 1e12;
constexpr char kTrajMagic[8] = {'L', 'S', 'A', 'T', 'R', 'A', 'J', '1'};

// Per-observation successor table with cumulative weights for inverse-CDF
// sampling; supports are small so a linear scan wins.
struct ChainSampler {
  std::vector<std::int32_t> offsets;    // Z + 1
  std::vector<std::int32_t> successor;  // flattened successor ids
  std::vector<double> cumulative;       // flattened cumulative weights
  std::vector<double> stationary_cum;   // Z

  explicit ChainSampler(const LsaInstance& inst) {
    const long z_count = inst.z_count();
    offsets.reserve(z_count + 1);
    offsets.push_back(0);
    for (long z = 0; z < z_count; ++z) {
      double acc = 0.0;
      for (long w = 0; w < z_count; ++w) {
        const double p = inst.z_kernel(z, w);
        if (p > 0.0) {
          acc += p;
          successor.push_back(static_cast<std::int32_t>(w));
          cumulative.push_back(acc);
        }
      }
      if (!cumulative.empty()) cumulative.back() = 1.0;
      offsets.push_back(static_cast<std::int32_t>(successor.size()));
    }
    stationary_cum.reserve(z_count);
    double acc = 0.0;
    for (long z = 0; z < z_count; ++z) {
      acc += inst.z_stationary(z);
      stationary_cum.push_back(acc);
    }
    if (!stationary_cum.empty()) stationary_cum.back() = 1.0;
  }

  std::int32_t step(std::int32_t z, double u) const {
    const std::int32_t begin = offsets[z];
    const std::int32_t end = offsets[z + 1];
    for (std::int32_t k = begin; k < end; ++k) {
      if (u < cumulative[k]) return successor[k];
    }
    return successor[end - 1];
  }

  std::int32_t from_stationary(double u) const {
    const auto it =
        std::upper_bound(stationary_cum.begin(), stationary_cum.end(), u);
    const auto idx = it == stationary_cum.end()
                         ? stationary_cum.size() - 1
                         : static_cast<std::size_t>(
                               it - stationary_cum.begin());
    return static_cast<std::int32_t>(idx);
  }
};

}  // namespace

Vector compute_pr_average(const RowMatrix& iterates) {
  const auto n = iterates.rows();
  const auto d = iterates.cols();
  Vector avg(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    NeumaierAcc acc;
    for (Eigen::Index k = 0; k < n; ++k) acc.add(iterates(k, j));
    avg(j) = acc.value() / double(n);
  }
  return avg;
}

LsaTrajectory run_lsa(const LsaInstance& inst, const StepSchedule& schedule,
                      long n, const Vector& theta0, std::uint64_t seed,
                      long burn_in, bool record_observations) {
  if (n < 2) {
    throw InvalidArgumentError("run_lsa: n must be >= 2");
  }
  schedule.validate();
  const int d = inst.dim();
  if (theta0.size() != d) {
    throw InvalidArgumentError("run_lsa: theta0 dimension mismatch");
  }
  if (burn_in < 0) {
    throw InvalidArgumentError("run_lsa: burn_in must be non-negative");
  }
  const long z_count = inst.z_count();
  if (z_count < 1 || inst.noise_table.rows() != z_count) {
    throw InvalidArgumentError("run_lsa: malformed instance");
  }

  // Flatten the update tables for the hot loop.
  std::vector<double> a_flat(static_cast<std::size_t>(z_count) * d * d);
  std::vector<double> b_flat(static_cast<std::size_t>(z_count) * d);
  for (long z = 0; z < z_count; ++z) {
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        a_flat[(static_cast<std::size_t>(z) * d + i) * d + j] =
            inst.per_z_A[z](i, j);
      }
      b_flat[static_cast<std::size_t>(z) * d + i] = inst.per_z_b(z, i);
    }
  }

  const ChainSampler sampler(inst);
  Rng rng(seed);

  std::int32_t z;
  if (burn_in == 0) {
    z = sampler.from_stationary(rng.uniform());
  } else {
    z = 0;
    for (long i = 0; i < burn_in; ++i) z = sampler.step(z, rng.uniform());
  }

  LsaTrajectory traj;
  traj.n = n;
  traj.schedule = schedule;
  traj.seed = seed;
  traj.iterates.resize(n, d);
  if (record_observations) traj.z_path.resize(n - 1);

  std::vector<double> theta(theta0.data(), theta0.data() + d);
  std::vector<double> delta(d);
  std::vector<NeumaierAcc> sum(d);
  for (int j = 0; j < d; ++j) {
    traj.iterates(0, j) = theta[j];
    sum[j].add(theta[j]);
  }

  for (long k = 1; k < n; ++k) {
    const double alpha = step_size(schedule, k);
    const double* a_z = &a_flat[static_cast<std::size_t>(z) * d * d];
    const double* b_z = &b_flat[static_cast<std::size_t>(z) * d];
    for (int i = 0; i < d; ++i) {
      double acc = -b_z[i];
      const double* row = a_z + static_cast<std::size_t>(i) * d;
      for (int j = 0; j < d; ++j) acc += row[j] * theta[j];
      delta[i] = acc;
    }
    for (int i = 0; i < d; ++i) {
      theta[i] -= alpha * delta[i];
      if (!(std::abs(theta[i]) <= kDivergenceBound)) {
        throw DivergenceError(
            "run_lsa: iterate exceeded 1e12 at step " + std::to_string(k) +
            " (step size too large for this instance?)");
      }
      traj.iterates(k, i) = theta[i];
      sum[i].add(theta[i]);
    }
    if (record_observations) traj.z_path[k - 1] = z;
    if (k + 1 < n) z = sampler.step(z, rng.uniform());
  }

  traj.pr_average = Vector(d);
  for (int j = 0; j < d; ++j) traj.pr_average(j) = sum[j].value() / double(n);
  return traj;
}

double pr_error_projection(const LsaTrajectory& traj, const GroundTruth& gt,
                           const Vector& u) {
  if (std::abs(u.norm() - 1.0) > 1e-10) {
    throw InvalidArgumentError(
        "pr_error_projection: direction must be a unit vector");
  }
  return std::sqrt(double(traj.n)) *
         u.dot(traj.pr_average - gt.theta_star);
}

void save_trajectory(const LsaTrajectory& traj, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("save_trajectory: cannot open " + path);
  }
  out.write(kTrajMagic, sizeof(kTrajMagic));
  const std::uint64_t n = static_cast<std::uint64_t>(traj.iterates.rows());
  const std::uint64_t d = static_cast<std::uint64_t>(traj.iterates.cols());
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(&d), sizeof(d));
  out.write(reinterpret_cast<const char*>(traj.iterates.data()),
            static_cast<std::streamsize>(n * d * sizeof(double)));
  if (!out) {
    throw Error("save_trajectory: write failed for " + path);
  }
}

LsaTrajectory load_trajectory(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("load_trajectory: cannot open " + path);
  }
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kTrajMagic, sizeof(magic)) != 0) {
    throw Error("load_trajectory: bad magic in " + path);
  }
  std::uint64_t n = 0;
  std::uint64_t d = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  in.read(reinterpret_cast<char*>(&d), sizeof(d));
  if (!in || n == 0 || d == 0 || d > (1u << 20)) {
    throw Error("load_trajectory: bad header in " + path);
  }
  LsaTrajectory traj;
  traj.n = static_cast<long>(n);
  traj.iterates.resize(static_cast<Eigen::Index>(n),
                       static_cast<Eigen::Index>(d));
  in.read(reinterpret_cast<char*>(traj.iterates.data()),
          static_cast<std::streamsize>(n * d * sizeof(double)));
  if (!in) {
    throw Error("load_trajectory: truncated payload in " + path);
  }
  traj.pr_average = compute_pr_average(traj.iterates);
  return traj;
}

}  // namespace lsam
