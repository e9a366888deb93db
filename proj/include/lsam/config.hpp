#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lsam/env.hpp"
#include "lsam/inference.hpp"
#include "lsam/toml_lite.hpp"

namespace lsam {

enum class EnvKind { garnet, lake };
enum class PolicyKind { random, greedy };
enum class DirectionKind { feature_of_state, random_unit, explicit_vector };

// Full experiment description. Loaded from a TOML file with sections
// [env], [features], [schedule], [experiment], [bootstrap]; unknown keys
// are errors.
struct ExperimentConfig {
  // [env]
  EnvKind env_kind = EnvKind::garnet;
  int n_states = 6;
  int n_actions = 2;
  int branching = 3;
  int width = 8;
  int height = 8;
  double hole_fraction = 0.2;
  PolicyKind policy = PolicyKind::random;
  double discount = 0.8;

  // [features]
  int feature_dim = 2;

  // [schedule]; c0 and k0 fall back to contraction-safe defaults computed
  // from the instance when omitted.
  double gamma = 0.6;
  std::optional<double> c0;
  std::optional<long> k0;

  // [experiment]
  std::vector<long> n_grid;
  long replicates = 1;
  std::vector<double> levels{0.8, 0.9, 0.95};
  DirectionKind direction = DirectionKind::random_unit;
  int direction_state = 0;
  std::uint64_t direction_seed = 1;
  std::vector<double> direction_vector;
  std::uint64_t base_seed = 0;
  unsigned threads = 0;  // 0 = hardware concurrency

  // [bootstrap]
  ObmConfig block_rule{BlockRule::pow45, 0};

  void validate() const;

  // Stable content hash over everything that identifies the experiment.
  // Execution details (threads) are excluded so outputs can be compared
  // across worker counts.
  std::uint64_t config_hash() const;

  static ExperimentConfig from_table(const TomlTable& table);
  static ExperimentConfig from_file(
      const std::string& path,
      const std::vector<std::pair<std::string, std::string>>& overrides = {});
};

}  // namespace lsam
