#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lsam/analysis.hpp"
#include "lsam/schedule.hpp"

namespace lsam {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A stored run of the averaged recursion: iterates theta_0..theta_{n-1}
// row-major plus their running mean.
struct LsaTrajectory {
  RowMatrix iterates;  // n x d
  Vector pr_average;
  long n = 0;
  StepSchedule schedule;
  std::uint64_t seed = 0;
  // Observation indices Z_1..Z_{n-1}; filled only when requested.
  std::vector<std::int32_t> z_path;

  int dim() const { return static_cast<int>(iterates.cols()); }
};

// Compensated column means of the iterate matrix.
Vector compute_pr_average(const RowMatrix& iterates);

// Runs theta_k = theta_{k-1} - alpha_k (A(Z_k) theta_{k-1} - b(Z_k)) for
// k = 1..n-1 with the observation chain sampled from inst.z_kernel. With
// burn_in == 0 the chain starts from the exact stationary distribution;
// otherwise it starts from observation 0 and discards burn_in transitions.
// Throws DivergenceError when any coordinate exceeds 1e12 in magnitude.
// Bit-identical for identical arguments.
LsaTrajectory run_lsa(const LsaInstance& inst, const StepSchedule& schedule,
                      long n, const Vector& theta0, std::uint64_t seed,
                      long burn_in = 0, bool record_observations = false);

// sqrt(n) * u^T (pr_average - theta_star).
double pr_error_projection(const LsaTrajectory& traj, const GroundTruth& gt,
                           const Vector& u);

// Binary trajectory dump: 8-byte magic "LSATRAJ1", then n and d as 64-bit
// little-endian unsigned integers, then the iterates row-major as 64-bit
// little-endian floats.
void save_trajectory(const LsaTrajectory& traj, const std::string& path);
LsaTrajectory load_trajectory(const std::string& path);

}  // namespace lsam
