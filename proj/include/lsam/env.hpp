#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lsam {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Tabular discounted MDP. transition[a](s, s') = P(s' | s, a); rewards are
// deterministic per (s, a) and live in [0, 1].
struct FiniteMdp {
  int n_states = 0;
  int n_actions = 0;
  std::vector<Matrix> transition;  // one S x S matrix per action
  Matrix reward;                   // S x A
  double discount = 0.0;

  void validate() const;
};

struct Policy {
  Matrix probs;  // S x A, rows sum to 1

  void validate() const;
};

// State chain induced by a policy: kernel, stationary distribution, and the
// smallest power whose Dobrushin coefficient drops to 1/4 (when found).
struct InducedChain {
  Matrix kernel;
  Vector stationary;
  std::optional<long> mixing_time;
};

struct FeatureMap {
  Matrix features;  // S x d, unit-norm rows
  int dim = 0;
};

// Random MDP with `branching` successors per (s, a); transition rows are
// normalized uniform draws over the chosen successors, rewards are uniform
// on [0, 1]. Pure function of the seed.
FiniteMdp garnet_generate(int n_states, int n_actions, int branching,
                          std::uint64_t seed);

// Grid world with deterministic 4-direction moves: start at tile 0, goal at
// the last tile, holes drawn per tile with probability hole_fraction.
// Reward 1 on any transition into the goal. Absorbing tiles (holes, goal)
// restart to tile 0, which keeps the chain on a single recurrent class.
// Layouts are rejection-resampled until every walkable tile connects to the
// start and every hole is enterable; fails after 1000 attempts.
FiniteMdp lake_generate(int width, int height, double hole_fraction,
                        std::uint64_t seed);

// Rows are i.i.d. uniform draws normalized to sum 1.
Policy random_policy(const FiniteMdp& mdp, std::uint64_t seed);

// Deterministic optimal policy computed by exact policy iteration.
Policy greedy_policy(const FiniteMdp& mdp, double tol);

// Solves (I - discount * P_pi) V = r_pi.
Vector exact_value_function(const FiniteMdp& mdp, const Policy& policy);

InducedChain induce_chain(const FiniteMdp& mdp, const Policy& policy);

// Worst-case total-variation distance between two rows of the kernel.
double dobrushin(const Matrix& kernel);

// Smallest t <= cap with dobrushin(kernel^t) <= 1/4, if one exists.
// Valid because the coefficient is non-increasing under kernel powers.
std::optional<long> mixing_time(const Matrix& kernel, long cap);

// i.i.d. standard Gaussian rows divided by their Euclidean norm.
FeatureMap random_features(int n_states, int d, std::uint64_t seed);

// Environment bundle serialization. Doubles survive the round trip exactly.
struct EnvBundle {
  FiniteMdp mdp;
  Policy policy;
  FeatureMap features;
};

std::string env_to_json(const EnvBundle& bundle);
EnvBundle env_from_json(const std::string& text);

}  // namespace lsam
