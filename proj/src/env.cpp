#include "lsam/env.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iostream>
#include <limits>
#include <numeric>
#include <utility>

#include <json.hpp>

#include "lsam/errors.hpp"
#include "lsam/rng.hpp"

namespace lsam {
namespace {

// Stream-separation tags so that generators fed the same raw seed do not
// share a generator state.
constexpr std::uint64_t kTagGarnet = 0x6761726e65740001ULL;
constexpr std::uint64_t kTagLake = 0x6c616b6500000001ULL;
constexpr std::uint64_t kTagPolicy = 0x706f6c6963790001ULL;
constexpr std::uint64_t kTagFeatures = 0x6665617475720001ULL;

constexpr double kRowSumTol = 1e-12;

void check_stochastic_rows(const Matrix& m, const char* what) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (m.row(r).minCoeff() < 0.0) {
      throw InvalidArgumentError(std::string(what) + ": negative probability");
    }
    if (std::abs(m.row(r).sum() - 1.0) > kRowSumTol) {
      throw InvalidArgumentError(std::string(what) +
                                 ": row does not sum to 1");
    }
  }
}

}  // namespace

void FiniteMdp::validate() const {
  if (n_states < 1 || n_actions < 1) {
    throw InvalidArgumentError("FiniteMdp: empty state or action space");
  }
  if (static_cast<int>(transition.size()) != n_actions ||
      reward.rows() != n_states || reward.cols() != n_actions) {
    throw InvalidArgumentError("FiniteMdp: inconsistent table shapes");
  }
  // Zero is allowed: the myopic case is a legitimate evaluation target.
  if (!(discount >= 0.0 && discount < 1.0)) {
    throw InvalidArgumentError("FiniteMdp: discount must lie in [0, 1)");
  }
  for (const auto& p : transition) {
    if (p.rows() != n_states || p.cols() != n_states) {
      throw InvalidArgumentError("FiniteMdp: transition shape mismatch");
    }
    check_stochastic_rows(p, "FiniteMdp transition");
  }
  if (reward.minCoeff() < 0.0 || reward.maxCoeff() > 1.0) {
    throw InvalidArgumentError("FiniteMdp: reward outside [0, 1]");
  }
}

void Policy::validate() const {
  if (probs.rows() < 1 || probs.cols() < 1) {
    throw InvalidArgumentError("Policy: empty table");
  }
  check_stochastic_rows(probs, "Policy");
}

FiniteMdp garnet_generate(int n_states, int n_actions, int branching,
                          std::uint64_t seed) {
  if (n_states < 1 || n_actions < 1 || branching < 1) {
    throw InvalidArgumentError("garnet_generate: counts must be positive");
  }
  if (branching > n_states) {
    throw InvalidArgumentError(
        "garnet_generate: branching exceeds state count");
  }

  Rng rng(mix_seed(seed, kTagGarnet));
  FiniteMdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.discount = 0.0;  // caller sets; generators leave a placeholder
  mdp.transition.assign(n_actions, Matrix::Zero(n_states, n_states));
  mdp.reward = Matrix::Zero(n_states, n_actions);

  std::vector<int> order(n_states);
  std::vector<double> cuts(branching);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      std::iota(order.begin(), order.end(), 0);
      // partial Fisher-Yates: pick `branching` distinct successors
      for (int i = 0; i < branching; ++i) {
        const auto j =
            i + static_cast<int>(rng.below(std::uint64_t(n_states - i)));
        std::swap(order[i], order[j]);
      }
      double total = 0.0;
      do {
        total = 0.0;
        for (int i = 0; i < branching; ++i) {
          cuts[i] = rng.uniform();
          total += cuts[i];
        }
      } while (total <= 0.0);
      for (int i = 0; i < branching; ++i) {
        mdp.transition[a](s, order[i]) = cuts[i] / total;
      }
      mdp.reward(s, a) = rng.uniform();
    }
  }
  return mdp;
}

namespace {

struct LakeLayout {
  std::vector<bool> hole;
  std::vector<bool> reachable_core;  // walkable, non-goal, connected to start
};

// A layout works when the goal is enterable, every walkable tile connects to
// the start, and every hole can be stepped into. The last two conditions
// keep the restart chain irreducible under any full-support policy.
bool layout_ok(const LakeLayout& lay, int width, int height) {
  const int n = width * height;
  const int goal = n - 1;
  std::vector<bool> visited(n, false);
  std::deque<int> frontier;
  visited[0] = true;
  frontier.push_back(0);
  const auto core = [&](int t) { return !lay.hole[t] && t != goal; };
  while (!frontier.empty()) {
    const int t = frontier.front();
    frontier.pop_front();
    const int r = t / width;
    const int c = t % width;
    const int nbr[4] = {r > 0 ? t - width : -1, r + 1 < height ? t + width : -1,
                        c > 0 ? t - 1 : -1, c + 1 < width ? t + 1 : -1};
    for (int u : nbr) {
      if (u >= 0 && core(u) && !visited[u]) {
        visited[u] = true;
        frontier.push_back(u);
      }
    }
  }
  const auto has_visited_neighbor = [&](int t) {
    const int r = t / width;
    const int c = t % width;
    const int nbr[4] = {r > 0 ? t - width : -1, r + 1 < height ? t + width : -1,
                        c > 0 ? t - 1 : -1, c + 1 < width ? t + 1 : -1};
    for (int u : nbr) {
      if (u >= 0 && core(u) && visited[u]) return true;
    }
    return false;
  };
  if (!has_visited_neighbor(goal)) return false;
  for (int t = 0; t < n; ++t) {
    if (core(t) && !visited[t]) return false;
    if (lay.hole[t] && !has_visited_neighbor(t)) return false;
  }
  return true;
}

}  // namespace

FiniteMdp lake_generate(int width, int height, double hole_fraction,
                        std::uint64_t seed) {
  if (width < 1 || height < 1 ||
      static_cast<long>(width) * height < 2) {
    throw InvalidArgumentError("lake_generate: grid needs at least 2 tiles");
  }
  if (!(hole_fraction >= 0.0 && hole_fraction <= 0.5)) {
    throw InvalidArgumentError(
        "lake_generate: hole_fraction must lie in [0, 0.5]");
  }

  const int n = width * height;
  const int goal = n - 1;
  Rng rng(mix_seed(seed, kTagLake));

  LakeLayout lay;
  bool found = false;
  for (int attempt = 0; attempt < 1000 && !found; ++attempt) {
    lay.hole.assign(n, false);
    for (int t = 1; t < n - 1; ++t) {
      lay.hole[t] = rng.uniform() < hole_fraction;
    }
    found = layout_ok(lay, width, height);
  }
  if (!found) {
    throw LayoutInfeasibleError(
        "lake_generate: no solvable layout in 1000 resamples");
  }

  FiniteMdp mdp;
  mdp.n_states = n;
  mdp.n_actions = 4;  // up, down, left, right
  mdp.discount = 0.0;
  mdp.transition.assign(4, Matrix::Zero(n, n));
  mdp.reward = Matrix::Zero(n, 4);

  const auto move = [&](int t, int a) {
    const int r = t / width;
    const int c = t % width;
    switch (a) {
      case 0: return r > 0 ? t - width : t;
      case 1: return r + 1 < height ? t + width : t;
      case 2: return c > 0 ? t - 1 : t;
      default: return c + 1 < width ? t + 1 : t;
    }
  };

  for (int t = 0; t < n; ++t) {
    const bool absorbing = lay.hole[t] || t == goal;
    for (int a = 0; a < 4; ++a) {
      if (absorbing) {
        mdp.transition[a](t, 0) = 1.0;  // restart
      } else {
        const int next = move(t, a);
        mdp.transition[a](t, next) = 1.0;
        mdp.reward(t, a) = next == goal ? 1.0 : 0.0;
      }
    }
  }
  return mdp;
}

Policy random_policy(const FiniteMdp& mdp, std::uint64_t seed) {
  mdp.validate();
  Rng rng(mix_seed(seed, kTagPolicy));
  Policy policy;
  policy.probs = Matrix::Zero(mdp.n_states, mdp.n_actions);
  std::vector<double> draws(mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s) {
    double total = 0.0;
    do {
      total = 0.0;
      for (int a = 0; a < mdp.n_actions; ++a) {
        draws[a] = rng.uniform();
        total += draws[a];
      }
    } while (total <= 0.0);
    for (int a = 0; a < mdp.n_actions; ++a) {
      policy.probs(s, a) = draws[a] / total;
    }
  }
  return policy;
}

Vector exact_value_function(const FiniteMdp& mdp, const Policy& policy) {
  const int n = mdp.n_states;
  Matrix p_pi = Matrix::Zero(n, n);
  Vector r_pi = Vector::Zero(n);
  for (int a = 0; a < mdp.n_actions; ++a) {
    p_pi.noalias() += policy.probs.col(a).asDiagonal() * mdp.transition[a];
    r_pi += policy.probs.col(a).cwiseProduct(mdp.reward.col(a));
  }
  const Matrix system = Matrix::Identity(n, n) - mdp.discount * p_pi;
  return system.partialPivLu().solve(r_pi);
}

Policy greedy_policy(const FiniteMdp& mdp, double tol) {
  mdp.validate();
  const int n = mdp.n_states;
  const int na = mdp.n_actions;

  Policy policy;
  policy.probs = Matrix::Zero(n, na);
  // start greedy on immediate reward
  for (int s = 0; s < n; ++s) {
    int best = 0;
    for (int a = 1; a < na; ++a) {
      if (mdp.reward(s, a) > mdp.reward(s, best)) best = a;
    }
    policy.probs(s, best) = 1.0;
  }

  const long max_sweeps = static_cast<long>(n) * na + 100;
  Vector value = Vector::Zero(n);
  for (long sweep = 0; sweep < max_sweeps; ++sweep) {
    const Vector new_value = exact_value_function(mdp, policy);

    Policy improved;
    improved.probs = Matrix::Zero(n, na);
    for (int s = 0; s < n; ++s) {
      int best = 0;
      double best_q = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < na; ++a) {
        const double q =
            mdp.reward(s, a) + mdp.discount * mdp.transition[a].row(s).dot(new_value);
        if (q > best_q + 1e-13) {
          best_q = q;
          best = a;
        }
      }
      improved.probs(s, best) = 1.0;
    }

    const bool stable =
        (improved.probs.array() == policy.probs.array()).all();
    const bool converged =
        sweep > 0 && (new_value - value).lpNorm<Eigen::Infinity>() <= tol;
    policy = std::move(improved);
    value = new_value;
    if (stable || converged) return policy;
  }
  throw NonConvergenceError("greedy_policy: policy iteration did not settle");
}

double dobrushin(const Matrix& kernel) {
  const Eigen::Index n = kernel.rows();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double tv = 0.5 * (kernel.row(i) - kernel.row(j)).lpNorm<1>();
      worst = std::max(worst, tv);
    }
  }
  return worst;
}

namespace {

Matrix kernel_power(const Matrix& kernel, long t) {
  Matrix result = Matrix::Identity(kernel.rows(), kernel.cols());
  Matrix base = kernel;
  long e = t;
  while (e > 0) {
    if (e & 1) result = result * base;
    base = base * base;
    e >>= 1;
  }
  return result;
}

}  // namespace

std::optional<long> mixing_time(const Matrix& kernel, long cap) {
  if (cap < 1) return std::nullopt;
  const auto contracted = [&](long t) {
    return dobrushin(kernel_power(kernel, t)) <= 0.25;
  };
  if (contracted(1)) return 1;

  // The coefficient is submultiplicative and bounded by 1, hence
  // non-increasing in the power: double to bracket, then bisect.
  long hi = 1;
  while (hi < cap) {
    hi = std::min(cap, hi * 2);
    if (contracted(hi)) {
      long lo = hi / 2 + 1;
      while (lo < hi) {
        const long mid = lo + (hi - lo) / 2;
        if (contracted(mid)) {
          hi = mid;
        } else {
          lo = mid + 1;
        }
      }
      return hi;
    }
    if (hi == cap) break;
  }
  return std::nullopt;
}

InducedChain induce_chain(const FiniteMdp& mdp, const Policy& policy) {
  mdp.validate();
  policy.validate();
  if (policy.probs.rows() != mdp.n_states ||
      policy.probs.cols() != mdp.n_actions) {
    throw InvalidArgumentError("induce_chain: policy shape mismatch");
  }

  const int n = mdp.n_states;
  InducedChain chain;
  chain.kernel = Matrix::Zero(n, n);
  for (int a = 0; a < mdp.n_actions; ++a) {
    chain.kernel.noalias() +=
        policy.probs.col(a).asDiagonal() * mdp.transition[a];
  }

  // Left fixed point: the kernel of (P^T - I), which must be 1-dimensional.
  Matrix system = chain.kernel.transpose() - Matrix::Identity(n, n);
  Eigen::FullPivLU<Matrix> lu(system);
  lu.setThreshold(1e-9);
  if (n - lu.rank() != 1) {
    throw ReducibleChainError(
        "induce_chain: stationary solve singular (multiple or no invariant "
        "directions at tolerance 1e-9)");
  }
  Vector mu = lu.kernel().col(0);
  if (mu.sum() < 0.0) mu = -mu;
  mu /= mu.sum();
  if (mu.minCoeff() < 1e-12) {
    throw ReducibleChainError(
        "induce_chain: stationary mass vanishes on some state (chain "
        "effectively reducible)");
  }
  const double residual =
      (mu.transpose() * chain.kernel - mu.transpose()).lpNorm<Eigen::Infinity>();
  if (residual > 1e-10) {
    throw ReducibleChainError("induce_chain: stationary residual too large");
  }
  chain.stationary = std::move(mu);
  chain.mixing_time =
      mixing_time(chain.kernel, 10L * static_cast<long>(n) * n);
  return chain;
}

FeatureMap random_features(int n_states, int d, std::uint64_t seed) {
  if (n_states < 1 || d < 1) {
    throw InvalidArgumentError("random_features: counts must be positive");
  }
  if (n_states < d) {
    std::cerr << "warning: random_features with n_states < d gives a "
                 "rank-deficient design\n";
  }
  Rng rng(mix_seed(seed, kTagFeatures));
  FeatureMap map;
  map.dim = d;
  map.features = Matrix::Zero(n_states, d);
  for (int s = 0; s < n_states; ++s) {
    double norm = 0.0;
    int attempt = 0;
    for (; attempt < 100; ++attempt) {
      for (int j = 0; j < d; ++j) map.features(s, j) = rng.normal();
      norm = map.features.row(s).norm();
      if (norm >= 1e-8) break;
    }
    if (attempt == 100) {
      throw DegenerateFeatureError("random_features: zero-norm row persisted");
    }
    map.features.row(s) /= norm;
  }
  return map;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) {
    throw InvalidArgumentError("env_from_json: malformed matrix");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j.at(r);
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw InvalidArgumentError("env_from_json: ragged matrix");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(c).get<double>();
  }
  return m;
}

}  // namespace

std::string env_to_json(const EnvBundle& bundle) {
  nlohmann::json doc;
  doc["n_states"] = bundle.mdp.n_states;
  doc["n_actions"] = bundle.mdp.n_actions;
  doc["discount"] = bundle.mdp.discount;
  nlohmann::json transition = nlohmann::json::array();
  for (int s = 0; s < bundle.mdp.n_states; ++s) {
    nlohmann::json per_action = nlohmann::json::array();
    for (int a = 0; a < bundle.mdp.n_actions; ++a) {
      nlohmann::json row = nlohmann::json::array();
      for (int t = 0; t < bundle.mdp.n_states; ++t) {
        row.push_back(bundle.mdp.transition[a](s, t));
      }
      per_action.push_back(std::move(row));
    }
    transition.push_back(std::move(per_action));
  }
  doc["transition"] = std::move(transition);
  doc["reward"] = matrix_to_json(bundle.mdp.reward);
  doc["policy"] = matrix_to_json(bundle.policy.probs);
  doc["features"] = matrix_to_json(bundle.features.features);
  return doc.dump(2);
}

EnvBundle env_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgumentError(std::string("env_from_json: ") + e.what());
  }
  EnvBundle bundle;
  bundle.mdp.n_states = doc.at("n_states").get<int>();
  bundle.mdp.n_actions = doc.at("n_actions").get<int>();
  bundle.mdp.discount = doc.at("discount").get<double>();
  const auto& transition = doc.at("transition");
  bundle.mdp.transition.assign(
      bundle.mdp.n_actions,
      Matrix::Zero(bundle.mdp.n_states, bundle.mdp.n_states));
  for (int s = 0; s < bundle.mdp.n_states; ++s) {
    for (int a = 0; a < bundle.mdp.n_actions; ++a) {
      const auto& row = transition.at(s).at(a);
      for (int t = 0; t < bundle.mdp.n_states; ++t) {
        bundle.mdp.transition[a](s, t) = row.at(t).get<double>();
      }
    }
  }
  bundle.mdp.reward = matrix_from_json(doc.at("reward"));
  bundle.policy.probs = matrix_from_json(doc.at("policy"));
  bundle.features.features = matrix_from_json(doc.at("features"));
  bundle.features.dim = static_cast<int>(bundle.features.features.cols());
  bundle.mdp.validate();
  bundle.policy.validate();
  return bundle;
}

}  // namespace lsam
