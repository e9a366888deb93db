#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "lsam/config.hpp"
#include "lsam/errors.hpp"
#include "lsam/experiments.hpp"
#include "lsam/version.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_path;  // empty = stdout
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::vector<std::string> overrides;
};

void attach_common(CLI::App* cmd, CommonArgs& args, bool out_required) {
  cmd->add_option("--config", args.config_path, "TOML experiment config")
      ->required();
  auto* out = cmd->add_option("--out", args.out_path,
                              "output path (default: stdout)");
  if (out_required) out->required();
  cmd->add_option("--seed", args.seed, "override experiment.base_seed");
  cmd->add_option("--threads", args.threads, "override experiment.threads");
  cmd->add_option("--override", args.overrides,
                  "config override as dotted.key=value (repeatable)");
}

lsam::ExperimentConfig load_config(const CommonArgs& args) {
  std::vector<std::pair<std::string, std::string>> overrides;
  for (const auto& text : args.overrides) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw lsam::ConfigError("override must look like key=value: " + text);
    }
    overrides.emplace_back(text.substr(0, eq), text.substr(eq + 1));
  }
  if (args.seed.has_value()) {
    overrides.emplace_back("experiment.base_seed", std::to_string(*args.seed));
  }
  if (args.threads.has_value()) {
    overrides.emplace_back("experiment.threads",
                           std::to_string(*args.threads));
  }
  return lsam::ExperimentConfig::from_file(args.config_path, overrides);
}

int with_output(const CommonArgs& args,
                const std::function<void(std::ostream&)>& body) {
  if (args.out_path.empty()) {
    body(std::cout);
    return 0;
  }
  std::ofstream file(args.out_path);
  if (!file) {
    throw lsam::ConfigError("cannot open output file: " + args.out_path);
  }
  body(file);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Averaged linear stochastic approximation on finite MDPs: "
               "ground truth, batch-means inference, and Monte Carlo "
               "experiment drivers"};
  app.set_version_flag("--version", lsam::kVersion);
  app.require_subcommand(1);

  CommonArgs diagnose_args;
  CommonArgs kolmogorov_args;
  CommonArgs coverage_args;
  CommonArgs variance_args;
  CommonArgs gen_env_args;

  attach_common(app.add_subcommand("diagnose",
                                   "assumption diagnostics as JSON"),
                diagnose_args, false);
  attach_common(app.add_subcommand(
                    "kolmogorov",
                    "Kolmogorov-distance decay of the averaged iterates"),
                kolmogorov_args, false);
  attach_common(app.add_subcommand("coverage",
                                   "confidence-interval coverage rates"),
                coverage_args, false);
  attach_common(app.add_subcommand(
                    "variance-decay",
                    "batch-means variance estimation error over n"),
                variance_args, false);
  attach_common(app.add_subcommand("gen-env",
                                   "write the environment bundle as JSON"),
                gen_env_args, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("diagnose")) {
      return with_output(diagnose_args, [&](std::ostream& out) {
        out << lsam::diagnose_json(load_config(diagnose_args)) << "\n";
      });
    }
    if (app.got_subcommand("kolmogorov")) {
      return with_output(kolmogorov_args, [&](std::ostream& out) {
        lsam::run_kolmogorov(load_config(kolmogorov_args), out);
      });
    }
    if (app.got_subcommand("coverage")) {
      return with_output(coverage_args, [&](std::ostream& out) {
        lsam::run_coverage(load_config(coverage_args), out);
      });
    }
    if (app.got_subcommand("variance-decay")) {
      return with_output(variance_args, [&](std::ostream& out) {
        lsam::run_variance_decay(load_config(variance_args), out);
      });
    }
    if (app.got_subcommand("gen-env")) {
      return with_output(gen_env_args, [&](std::ostream& out) {
        out << lsam::gen_env_json(load_config(gen_env_args)) << "\n";
      });
    }
  } catch (const lsam::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const lsam::ReducibleChainError& e) {
    std::cerr << "assumption failure (ergodicity): " << e.what() << "\n";
    return 3;
  } catch (const lsam::NotHurwitzError& e) {
    std::cerr << "assumption failure (stability): " << e.what() << "\n";
    return 3;
  } catch (const lsam::DegenerateDesignError& e) {
    std::cerr << "assumption failure (design): " << e.what() << "\n";
    return 3;
  } catch (const lsam::PoissonSolveError& e) {
    std::cerr << "assumption failure (noise solve): " << e.what() << "\n";
    return 3;
  } catch (const lsam::SingularMatrixError& e) {
    std::cerr << "assumption failure (system matrix): " << e.what() << "\n";
    return 3;
  } catch (const lsam::DivergenceError& e) {
    std::cerr << "runtime divergence: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
