#pragma once

#include <ostream>
#include <string>

#include "lsam/analysis.hpp"
#include "lsam/config.hpp"
#include "lsam/inference.hpp"

namespace lsam {

// Everything derived from a config before replicates start: environment,
// exact ground truth, contraction constants, resolved schedule, and the
// projection direction.
struct ProblemSetup {
  FiniteMdp mdp;
  Policy policy;
  FeatureMap features;
  InducedChain chain;
  LsaInstance inst;
  GroundTruth gt;
  TdStabilityConstants td;
  StepSchedule schedule;
  Vector u;
  double sigma2_limit = 0.0;  // u^T sigma_inf u
  double truth_proj = 0.0;    // u^T theta_star
};

ProblemSetup build_setup(const ExperimentConfig& cfg);

// Assumption checklist as a JSON document.
std::string diagnose_json(const ExperimentConfig& cfg);

// Environment bundle JSON for the gen-env subcommand.
std::string gen_env_json(const ExperimentConfig& cfg);

// Experiment drivers. Each writes a CSV with a '#' provenance line first;
// outputs are byte-identical for identical configs and seeds regardless of
// the worker count. On failure partial rows are flushed and a
// '# INCOMPLETE' trailer is appended before the error propagates.
void run_kolmogorov(const ExperimentConfig& cfg, std::ostream& out);
void run_coverage(const ExperimentConfig& cfg, std::ostream& out);
void run_variance_decay(const ExperimentConfig& cfg, std::ostream& out);

// Same drivers on a prebuilt setup (tests inject synthetic instances).
void run_kolmogorov_on(const ProblemSetup& setup, const ExperimentConfig& cfg,
                       std::ostream& out);
void run_coverage_on(const ProblemSetup& setup, const ExperimentConfig& cfg,
                     std::ostream& out);
void run_variance_decay_on(const ProblemSetup& setup,
                           const ExperimentConfig& cfg, std::ostream& out);

}  // namespace lsam
