#pragma once

#include <array>
#include <vector>

#include "lsam/env.hpp"
#include "lsam/schedule.hpp"

namespace lsam {

// A linear stochastic approximation problem on a finite observation space.
// Observations z enumerate the (s, a, s') triples with positive probability
// under the policy; per_z tables hold the update matrices A(z) and vectors
// b(z), and noise_table holds eps(z) = (A(z) - a_bar) theta_star -
// (b(z) - b_bar).
struct LsaInstance {
  Matrix a_bar;                // d x d
  Vector b_bar;                // d
  Matrix z_kernel;             // Z x Z
  Vector z_stationary;         // Z
  Matrix noise_table;          // Z x d
  std::vector<Matrix> per_z_A; // Z matrices, d x d
  Matrix per_z_b;              // Z x d

  // Bookkeeping filled by build_td_instance (optional for synthetic
  // instances built in tests).
  std::vector<std::array<int, 3>> z_labels;  // (s, a, s') per observation
  Vector state_stationary;                   // mu over states
  Matrix design;                             // sum_s mu(s) phi phi^T

  int dim() const { return static_cast<int>(a_bar.rows()); }
  long z_count() const { return static_cast<long>(z_kernel.rows()); }
};

struct GroundTruth {
  Vector theta_star;  // a_bar^{-1} b_bar
  Matrix sigma_eps;   // long-run noise covariance
  Matrix sigma_inf;   // a_bar^{-1} sigma_eps a_bar^{-T}
  Matrix design;      // feature second-moment matrix under mu
};

struct StabilityReport {
  Matrix q_matrix;
  double a_const = 0.0;
  double alpha_max = 0.0;
  double kappa_q = 0.0;
  bool hurwitz = false;
};

struct TdStabilityConstants {
  double a = 0.0;
  double alpha_max = 0.0;
};

// Assembles the exact observation chain and update tables for TD(0) policy
// evaluation on the given MDP. Throws ReducibleChainError when the induced
// chain has no strictly positive stationary distribution.
LsaInstance build_td_instance(const FiniteMdp& mdp, const Policy& policy,
                              const FeatureMap& features);

// theta_star, the long-run noise covariance via the Poisson equation on the
// observation chain, its image under a_bar^{-1}, and the design matrix.
GroundTruth ground_truth(const LsaInstance& inst);

// u^T sigma_inf u for a unit vector u.
double sigma_u(const GroundTruth& gt, const Vector& u);

// Solves a_bar^T Q + Q a_bar = p by Kronecker vectorization and derives the
// contraction constants. When -a_bar is not Hurwitz the report carries
// hurwitz = false and NaN constants; if the Lyapunov system itself is
// singular a NotHurwitzError is thrown.
StabilityReport stability(const Matrix& a_bar, const Matrix& p);

// Operator norm of b in the norm induced by the SPD matrix q.
double q_operator_norm(const Matrix& b, const Matrix& q);

// Closed-form TD constants with Q = I: a = (1 - discount) *
// lambda_min(design), alpha_max = (1 - discount) / (1 + discount)^2.
TdStabilityConstants td_stability_constants(const LsaInstance& inst,
                                            const FeatureMap& features,
                                            double discount);

// Finite-n variance of the projected averaged iterates, computed by the
// backward recursion in O(n d^2).
double finite_n_variance(const LsaInstance& inst, const GroundTruth& gt,
                         const StepSchedule& schedule, long n,
                         const Vector& u);

// JSON (full precision) for provenance records.
std::string ground_truth_to_json(const GroundTruth& gt);
std::string stability_to_json(const StabilityReport& report);

}  // namespace lsam
