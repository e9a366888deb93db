#include "lsam/config.hpp"

#include <cinttypes>
#include <cstdio>
#include <set>
#include <utility>

#include "lsam/errors.hpp"

namespace lsam {
namespace {

class TableReader {
 public:
  explicit TableReader(const TomlTable& table) : table_(table) {}

  const TomlValue* find(const std::string& key) {
    consumed_.insert(key);
    const auto it = table_.find(key);
    return it == table_.end() ? nullptr : &it->second;
  }

  const TomlValue& require(const std::string& key) {
    const TomlValue* v = find(key);
    if (v == nullptr) {
      throw ConfigError("missing required config key '" + key + "'");
    }
    return *v;
  }

  void reject_unknown() const {
    for (const auto& [key, value] : table_) {
      if (consumed_.count(key) == 0) {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  }

 private:
  const TomlTable& table_;
  std::set<std::string> consumed_;
};

int to_checked_int(std::int64_t v, const std::string& key) {
  if (v < -(1LL << 31) || v > (1LL << 31) - 1) {
    throw ConfigError("config key '" + key + "' out of range");
  }
  return static_cast<int>(v);
}

void append_hash(std::string& canon, const char* key, const std::string& v) {
  canon += key;
  canon += '=';
  canon += v;
  canon += ';';
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (discount <= 0.0 || discount >= 1.0) {
    throw ConfigError("env.discount must lie in (0, 1)");
  }
  if (env_kind == EnvKind::garnet) {
    if (n_states < 1 || n_actions < 1 || branching < 1 ||
        branching > n_states) {
      throw ConfigError("invalid garnet dimensions");
    }
  } else {
    if (width < 1 || height < 1 || static_cast<long>(width) * height < 2) {
      throw ConfigError("lake grid needs at least 2 tiles");
    }
    if (hole_fraction < 0.0 || hole_fraction > 0.5) {
      throw ConfigError("env.hole_fraction must lie in [0, 0.5]");
    }
  }
  if (feature_dim < 1) {
    throw ConfigError("features.dim must be positive");
  }
  if (!(gamma >= 0.5 && gamma < 1.0)) {
    throw ConfigError("schedule.gamma must lie in [1/2, 1)");
  }
  if (c0.has_value() && !(*c0 > 0.0)) {
    throw ConfigError("schedule.c0 must be positive");
  }
  if (k0.has_value() && *k0 < 0) {
    throw ConfigError("schedule.k0 must be non-negative");
  }
  if (n_grid.empty()) {
    throw ConfigError("experiment.n_grid must not be empty");
  }
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 4) {
      throw ConfigError("experiment.n_grid entries must be >= 4");
    }
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) {
      throw ConfigError("experiment.n_grid must be strictly increasing");
    }
  }
  if (replicates < 1) {
    throw ConfigError("experiment.replicates must be >= 1");
  }
  if (levels.empty()) {
    throw ConfigError("experiment.levels must not be empty");
  }
  for (double level : levels) {
    if (!(level > 0.0 && level < 1.0)) {
      throw ConfigError("experiment.levels entries must lie in (0, 1)");
    }
  }
  if (direction == DirectionKind::feature_of_state) {
    const int states = env_kind == EnvKind::garnet ? n_states : width * height;
    if (direction_state < 0 || direction_state >= states) {
      throw ConfigError("experiment.direction_state out of range");
    }
  }
  if (direction == DirectionKind::explicit_vector) {
    if (static_cast<int>(direction_vector.size()) != feature_dim) {
      throw ConfigError(
          "experiment.direction_vector length must equal features.dim");
    }
    double norm2 = 0.0;
    for (double x : direction_vector) norm2 += x * x;
    if (!(norm2 > 0.0)) {
      throw ConfigError("experiment.direction_vector must be nonzero");
    }
  }
  if (block_rule.rule == BlockRule::explicit_len && block_rule.block_len < 2) {
    throw ConfigError("bootstrap.block_len must be >= 2");
  }
}

std::uint64_t ExperimentConfig::config_hash() const {
  std::string canon;
  append_hash(canon, "env",
              env_kind == EnvKind::garnet ? "garnet" : "lake");
  if (env_kind == EnvKind::garnet) {
    append_hash(canon, "ns", std::to_string(n_states));
    append_hash(canon, "na", std::to_string(n_actions));
    append_hash(canon, "b", std::to_string(branching));
  } else {
    append_hash(canon, "w", std::to_string(width));
    append_hash(canon, "h", std::to_string(height));
    append_hash(canon, "hole", fmt_double(hole_fraction));
  }
  append_hash(canon, "policy",
              policy == PolicyKind::random ? "random" : "greedy");
  append_hash(canon, "discount", fmt_double(discount));
  append_hash(canon, "dim", std::to_string(feature_dim));
  append_hash(canon, "gamma", fmt_double(gamma));
  append_hash(canon, "c0", c0 ? fmt_double(*c0) : "auto");
  append_hash(canon, "k0", k0 ? std::to_string(*k0) : "auto");
  std::string grid;
  for (long n : n_grid) {
    grid += std::to_string(n);
    grid += ',';
  }
  append_hash(canon, "n_grid", grid);
  append_hash(canon, "replicates", std::to_string(replicates));
  std::string level_text;
  for (double level : levels) {
    level_text += fmt_double(level);
    level_text += ',';
  }
  append_hash(canon, "levels", level_text);
  switch (direction) {
    case DirectionKind::feature_of_state:
      append_hash(canon, "direction",
                  "feature_of_state:" + std::to_string(direction_state));
      break;
    case DirectionKind::random_unit:
      append_hash(canon, "direction",
                  "random_unit:" + std::to_string(direction_seed));
      break;
    case DirectionKind::explicit_vector: {
      std::string vec;
      for (double x : direction_vector) {
        vec += fmt_double(x);
        vec += ',';
      }
      append_hash(canon, "direction", "explicit:" + vec);
      break;
    }
  }
  append_hash(canon, "base_seed", std::to_string(base_seed));
  switch (block_rule.rule) {
    case BlockRule::explicit_len:
      append_hash(canon, "block",
                  "explicit:" + std::to_string(block_rule.block_len));
      break;
    case BlockRule::pow45:
      append_hash(canon, "block", "pow45");
      break;
    case BlockRule::pow34:
      append_hash(canon, "block", "pow34");
      break;
  }

  // FNV-1a
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : canon) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

ExperimentConfig ExperimentConfig::from_table(const TomlTable& table) {
  TableReader reader(table);
  ExperimentConfig cfg;

  const std::string kind = reader.require("env.kind").as_string("env.kind");
  if (kind == "garnet") {
    cfg.env_kind = EnvKind::garnet;
    cfg.n_states =
        to_checked_int(reader.require("env.n_states").as_int("env.n_states"),
                       "env.n_states");
    cfg.n_actions = to_checked_int(
        reader.require("env.n_actions").as_int("env.n_actions"),
        "env.n_actions");
    cfg.branching = to_checked_int(
        reader.require("env.branching").as_int("env.branching"),
        "env.branching");
  } else if (kind == "lake") {
    cfg.env_kind = EnvKind::lake;
    cfg.width = to_checked_int(reader.require("env.width").as_int("env.width"),
                               "env.width");
    cfg.height = to_checked_int(
        reader.require("env.height").as_int("env.height"), "env.height");
    cfg.hole_fraction =
        reader.require("env.hole_fraction").as_real("env.hole_fraction");
  } else {
    throw ConfigError("env.kind must be 'garnet' or 'lake'");
  }
  if (const auto* v = reader.find("env.policy")) {
    const std::string p = v->as_string("env.policy");
    if (p == "random") {
      cfg.policy = PolicyKind::random;
    } else if (p == "greedy") {
      cfg.policy = PolicyKind::greedy;
    } else {
      throw ConfigError("env.policy must be 'random' or 'greedy'");
    }
  }
  cfg.discount = reader.require("env.discount").as_real("env.discount");

  cfg.feature_dim = to_checked_int(
      reader.require("features.dim").as_int("features.dim"), "features.dim");

  cfg.gamma = reader.require("schedule.gamma").as_real("schedule.gamma");
  if (const auto* v = reader.find("schedule.c0")) {
    cfg.c0 = v->as_real("schedule.c0");
  }
  if (const auto* v = reader.find("schedule.k0")) {
    cfg.k0 = v->as_int("schedule.k0");
  }

  for (const auto& item :
       reader.require("experiment.n_grid").as_array("experiment.n_grid")) {
    cfg.n_grid.push_back(item.as_int("experiment.n_grid"));
  }
  cfg.replicates =
      reader.require("experiment.replicates").as_int("experiment.replicates");
  if (const auto* v = reader.find("experiment.levels")) {
    cfg.levels.clear();
    for (const auto& item : v->as_array("experiment.levels")) {
      cfg.levels.push_back(item.as_real("experiment.levels"));
    }
  }
  if (const auto* v = reader.find("experiment.direction")) {
    const std::string dir = v->as_string("experiment.direction");
    if (dir == "feature_of_state") {
      cfg.direction = DirectionKind::feature_of_state;
    } else if (dir == "random_unit") {
      cfg.direction = DirectionKind::random_unit;
    } else if (dir == "explicit") {
      cfg.direction = DirectionKind::explicit_vector;
    } else {
      throw ConfigError(
          "experiment.direction must be 'feature_of_state', 'random_unit', "
          "or 'explicit'");
    }
  }
  if (const auto* v = reader.find("experiment.direction_state")) {
    cfg.direction_state = to_checked_int(
        v->as_int("experiment.direction_state"), "experiment.direction_state");
  }
  if (const auto* v = reader.find("experiment.direction_seed")) {
    cfg.direction_seed =
        static_cast<std::uint64_t>(v->as_int("experiment.direction_seed"));
  }
  if (const auto* v = reader.find("experiment.direction_vector")) {
    for (const auto& item : v->as_array("experiment.direction_vector")) {
      cfg.direction_vector.push_back(item.as_real("experiment.direction_vector"));
    }
  }
  if (const auto* v = reader.find("experiment.base_seed")) {
    cfg.base_seed = static_cast<std::uint64_t>(v->as_int("experiment.base_seed"));
  }
  if (const auto* v = reader.find("experiment.threads")) {
    const auto t = v->as_int("experiment.threads");
    if (t < 0) throw ConfigError("experiment.threads must be >= 0");
    cfg.threads = static_cast<unsigned>(t);
  }

  if (const auto* v = reader.find("bootstrap.rule")) {
    const std::string rule = v->as_string("bootstrap.rule");
    if (rule == "explicit") {
      cfg.block_rule.rule = BlockRule::explicit_len;
    } else if (rule == "pow45") {
      cfg.block_rule.rule = BlockRule::pow45;
    } else if (rule == "pow34") {
      cfg.block_rule.rule = BlockRule::pow34;
    } else {
      throw ConfigError(
          "bootstrap.rule must be 'explicit', 'pow45', or 'pow34'");
    }
  }
  if (const auto* v = reader.find("bootstrap.block_len")) {
    cfg.block_rule.block_len = v->as_int("bootstrap.block_len");
  }
  if (cfg.block_rule.rule == BlockRule::explicit_len &&
      cfg.block_rule.block_len == 0) {
    throw ConfigError("bootstrap.block_len required with rule = 'explicit'");
  }

  reader.reject_unknown();
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(
    const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
  TomlTable table = parse_toml_file(path);
  for (const auto& [key, value] : overrides) {
    try {
      table[key] = parse_toml_value(value);
    } catch (const ConfigError& e) {
      throw ConfigError("override '" + key + "': " + e.what());
    }
  }
  return from_table(table);
}

}  // namespace lsam
