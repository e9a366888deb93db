#include "lsam/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <vector>

#include <json.hpp>

#include "lsam/errors.hpp"
#include "lsam/parallel.hpp"
#include "lsam/rng.hpp"
#include "lsam/stats.hpp"
#include "lsam/version.hpp"

namespace lsam {
namespace {

constexpr std::uint64_t kTagEnv = 0x656e760000000001ULL;
constexpr std::uint64_t kTagPolicy = 0x706f6c0000000001ULL;
constexpr std::uint64_t kTagFeatures = 0x6665610000000001ULL;
constexpr std::uint64_t kTagDirection = 0x6469720000000001ULL;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

void write_provenance(const ExperimentConfig& cfg, std::ostream& out) {
  out << "# lsam " << kVersion << " config=" << hash_hex(cfg.config_hash())
      << "\n";
}

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

Vector resolve_direction(const ExperimentConfig& cfg,
                         const FeatureMap& features) {
  switch (cfg.direction) {
    case DirectionKind::feature_of_state:
      return features.features.row(cfg.direction_state).transpose();
    case DirectionKind::explicit_vector: {
      Vector u(cfg.feature_dim);
      for (int i = 0; i < cfg.feature_dim; ++i) u(i) = cfg.direction_vector[i];
      return u / u.norm();
    }
    case DirectionKind::random_unit:
    default: {
      Rng rng(mix_seed(cfg.direction_seed, kTagDirection));
      Vector u(cfg.feature_dim);
      double norm = 0.0;
      do {
        for (int i = 0; i < cfg.feature_dim; ++i) u(i) = rng.normal();
        norm = u.norm();
      } while (norm < 1e-8);
      return u / norm;
    }
  }
}

StepSchedule resolve_schedule(const ExperimentConfig& cfg,
                              const TdStabilityConstants& td) {
  StepSchedule schedule;
  schedule.gamma = cfg.gamma;
  schedule.c0 = cfg.c0.value_or(0.9 * td.alpha_max);
  if (cfg.k0.has_value()) {
    schedule.k0 = *cfg.k0;
  } else {
    // smallest k0 with alpha_1 <= alpha_max
    long k0 = 0;
    if (schedule.c0 > td.alpha_max) {
      k0 = static_cast<long>(std::ceil(
          std::pow(schedule.c0 / td.alpha_max, 1.0 / cfg.gamma) - 1.0));
      if (k0 < 0) k0 = 0;
      while (schedule.c0 * std::pow(double(1 + k0), -cfg.gamma) >
             td.alpha_max) {
        ++k0;
      }
      while (k0 > 0 && schedule.c0 * std::pow(double(k0), -cfg.gamma) <=
                           td.alpha_max) {
        --k0;
      }
    }
    schedule.k0 = k0;
  }
  schedule.validate();
  return schedule;
}

struct EnvPieces {
  FiniteMdp mdp;
  Policy policy;
  FeatureMap features;
};

EnvPieces build_env(const ExperimentConfig& cfg) {
  cfg.validate();
  EnvPieces pieces;
  if (cfg.env_kind == EnvKind::garnet) {
    pieces.mdp = garnet_generate(cfg.n_states, cfg.n_actions, cfg.branching,
                                 mix_seed(cfg.base_seed, kTagEnv));
  } else {
    pieces.mdp = lake_generate(cfg.width, cfg.height, cfg.hole_fraction,
                               mix_seed(cfg.base_seed, kTagEnv));
  }
  pieces.mdp.discount = cfg.discount;
  pieces.policy = cfg.policy == PolicyKind::random
                      ? random_policy(pieces.mdp,
                                      mix_seed(cfg.base_seed, kTagPolicy))
                      : greedy_policy(pieces.mdp, 1e-10);
  pieces.features = random_features(pieces.mdp.n_states, cfg.feature_dim,
                                    mix_seed(cfg.base_seed, kTagFeatures));
  return pieces;
}

double quartile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, p);
}

}  // namespace

ProblemSetup build_setup(const ExperimentConfig& cfg) {
  EnvPieces pieces = build_env(cfg);
  ProblemSetup setup;
  setup.mdp = std::move(pieces.mdp);
  setup.policy = std::move(pieces.policy);
  setup.features = std::move(pieces.features);
  setup.chain = induce_chain(setup.mdp, setup.policy);
  setup.inst = build_td_instance(setup.mdp, setup.policy, setup.features);
  setup.gt = ground_truth(setup.inst);
  setup.td = td_stability_constants(setup.inst, setup.features, cfg.discount);
  setup.schedule = resolve_schedule(cfg, setup.td);
  setup.u = resolve_direction(cfg, setup.features);
  setup.sigma2_limit = sigma_u(setup.gt, setup.u);
  setup.truth_proj = setup.u.dot(setup.gt.theta_star);
  return setup;
}

std::string diagnose_json(const ExperimentConfig& cfg) {
  const ProblemSetup setup = build_setup(cfg);
  const StabilityReport stab = stability(
      setup.inst.a_bar, Matrix::Identity(setup.inst.dim(), setup.inst.dim()));

  double sup_noise = 0.0;
  for (long z = 0; z < setup.inst.z_count(); ++z) {
    sup_noise = std::max(sup_noise, setup.inst.noise_table.row(z).norm());
  }
  const double lambda_min_design =
      Eigen::SelfAdjointEigenSolver<Matrix>(setup.inst.design)
          .eigenvalues()
          .minCoeff();

  nlohmann::json doc;
  doc["artifact"] = kVersion;
  doc["config_hash"] = hash_hex(cfg.config_hash());
  if (setup.chain.mixing_time.has_value()) {
    const long t_mix = *setup.chain.mixing_time;
    doc["mixing_time"] = t_mix;
    doc["dobrushin_at_mixing_time"] =
        dobrushin(kernel_power(setup.chain.kernel, t_mix));
  } else {
    doc["mixing_time"] = nullptr;
    doc["dobrushin_at_mixing_time"] = nullptr;
  }
  doc["hurwitz"] = stab.hurwitz;
  doc["lambda_min_design"] = lambda_min_design;
  doc["a"] = setup.td.a;
  doc["alpha_max"] = setup.td.alpha_max;
  doc["kappa_q"] = stab.kappa_q;
  doc["sup_noise_norm"] = sup_noise;
  doc["c0"] = setup.schedule.c0;
  doc["k0"] = setup.schedule.k0;
  doc["gamma"] = setup.schedule.gamma;
  doc["step_within_contraction"] = setup.schedule.c0 <= setup.td.alpha_max;
  return doc.dump(2);
}

std::string gen_env_json(const ExperimentConfig& cfg) {
  EnvPieces pieces = build_env(cfg);
  EnvBundle bundle{std::move(pieces.mdp), std::move(pieces.policy),
                   std::move(pieces.features)};
  return env_to_json(bundle);
}

void run_kolmogorov_on(const ProblemSetup& setup, const ExperimentConfig& cfg,
                       std::ostream& out) {
  write_provenance(cfg, out);
  out << "n,replicates,b_n,kd_limit,kd_finite_n,kd_obm_median,kd_obm_q25,"
         "kd_obm_q75\n";
  out.flush();
  const unsigned threads = resolve_threads(cfg.threads);
  const long replicates = cfg.replicates;
  const Vector theta0 = Vector::Zero(setup.inst.dim());

  try {
    for (long n : cfg.n_grid) {
      const long b_n = resolve_block(cfg.block_rule, n);
      std::vector<double> stats(replicates);
      std::vector<double> obm_vars(replicates);
      parallel_for(static_cast<std::size_t>(replicates), threads,
                   [&](std::size_t i) {
                     const std::uint64_t seed =
                         mix_seed(cfg.base_seed,
                                  static_cast<std::uint64_t>(n),
                                  static_cast<std::uint64_t>(i));
                     const LsaTrajectory traj = run_lsa(
                         setup.inst, setup.schedule, n, theta0, seed);
                     stats[i] = pr_error_projection(traj, setup.gt, setup.u);
                     obm_vars[i] = obm_variance(traj, b_n, setup.u).variance;
                   });

      std::vector<double> sorted_stats = stats;
      std::sort(sorted_stats.begin(), sorted_stats.end());
      const double kd_limit =
          kolmogorov_distance(sorted_stats, std::sqrt(setup.sigma2_limit));
      const double sigma2_n =
          finite_n_variance(setup.inst, setup.gt, setup.schedule, n, setup.u);
      const double kd_finite =
          kolmogorov_distance(sorted_stats, std::sqrt(sigma2_n));

      std::vector<double> kd_obm(replicates);
      parallel_for(static_cast<std::size_t>(replicates), threads,
                   [&](std::size_t i) {
                     kd_obm[i] = kolmogorov_distance(sorted_stats,
                                                     std::sqrt(obm_vars[i]));
                   });

      out << n << ',' << replicates << ',' << b_n << ',' << fmt(kd_limit)
          << ',' << fmt(kd_finite) << ',' << fmt(quartile(kd_obm, 0.5)) << ','
          << fmt(quartile(kd_obm, 0.25)) << ',' << fmt(quartile(kd_obm, 0.75))
          << "\n";
      out.flush();
    }
  } catch (...) {
    out << "# INCOMPLETE\n";
    out.flush();
    throw;
  }
}

void run_coverage_on(const ProblemSetup& setup, const ExperimentConfig& cfg,
                     std::ostream& out) {
  write_provenance(cfg, out);
  out << "n,b_n,level,coverage_obm,stderr_obm,coverage_oracle,stderr_oracle\n";
  out.flush();
  const unsigned threads = resolve_threads(cfg.threads);
  const long replicates = cfg.replicates;
  const Vector theta0 = Vector::Zero(setup.inst.dim());
  const double sigma_limit = std::sqrt(setup.sigma2_limit);

  try {
    for (long n : cfg.n_grid) {
      const long b_n = resolve_block(cfg.block_rule, n);
      std::vector<double> centers(replicates);
      std::vector<double> sigmas(replicates);
      parallel_for(static_cast<std::size_t>(replicates), threads,
                   [&](std::size_t i) {
                     const std::uint64_t seed =
                         mix_seed(cfg.base_seed,
                                  static_cast<std::uint64_t>(n),
                                  static_cast<std::uint64_t>(i));
                     const LsaTrajectory traj = run_lsa(
                         setup.inst, setup.schedule, n, theta0, seed);
                     centers[i] = setup.u.dot(traj.pr_average);
                     sigmas[i] = std::sqrt(
                         obm_variance(traj, b_n, setup.u).variance);
                   });

      const double sqrt_n = std::sqrt(double(n));
      for (double level : cfg.levels) {
        const double z = normal_quantile(0.5 * (1.0 + level));
        std::vector<IntervalRecord> obm_records(replicates);
        std::vector<IntervalRecord> oracle_records(replicates);
        for (long i = 0; i < replicates; ++i) {
          const double half_obm = z * sigmas[i] / sqrt_n;
          const double half_oracle = z * sigma_limit / sqrt_n;
          obm_records[i] = {centers[i] - half_obm, centers[i] + half_obm,
                            setup.truth_proj};
          oracle_records[i] = {centers[i] - half_oracle,
                               centers[i] + half_oracle, setup.truth_proj};
        }
        const CoverageResult obm_cov = coverage(obm_records);
        const CoverageResult oracle_cov = coverage(oracle_records);
        out << n << ',' << b_n << ',' << fmt(level) << ','
            << fmt(obm_cov.rate) << ',' << fmt(obm_cov.stderr_) << ','
            << fmt(oracle_cov.rate) << ',' << fmt(oracle_cov.stderr_) << "\n";
        out.flush();
      }
    }
  } catch (...) {
    out << "# INCOMPLETE\n";
    out.flush();
    throw;
  }
}

void run_variance_decay_on(const ProblemSetup& setup,
                           const ExperimentConfig& cfg, std::ostream& out) {
  if (cfg.block_rule.rule != BlockRule::pow34) {
    std::cerr << "warning: variance-decay is calibrated for bootstrap.rule = "
                 "\"pow34\"\n";
  }
  write_provenance(cfg, out);
  out << "n,b_n,abs_err_median,abs_err_q25,abs_err_q75,remainder_median\n";
  out.flush();
  const unsigned threads = resolve_threads(cfg.threads);
  const long replicates = cfg.replicates;
  const Vector theta0 = Vector::Zero(setup.inst.dim());

  try {
    for (long n : cfg.n_grid) {
      const long b_n = resolve_block(cfg.block_rule, n);
      std::vector<double> abs_err(replicates);
      std::vector<double> remainder(replicates);
      parallel_for(
          static_cast<std::size_t>(replicates), threads, [&](std::size_t i) {
            const std::uint64_t seed =
                mix_seed(cfg.base_seed, static_cast<std::uint64_t>(n),
                         static_cast<std::uint64_t>(i));
            const LsaTrajectory traj =
                run_lsa(setup.inst, setup.schedule, n, theta0, seed, 0,
                        /*record_observations=*/true);
            const double var_theta =
                obm_variance(traj, b_n, setup.u).variance;
            const double var_noise = obm_noise_variance(
                setup.inst, setup.gt, traj.z_path, b_n, setup.u);
            abs_err[i] = std::abs(var_theta - setup.sigma2_limit);
            remainder[i] = std::abs(var_theta - var_noise);
          });

      out << n << ',' << b_n << ',' << fmt(quartile(abs_err, 0.5)) << ','
          << fmt(quartile(abs_err, 0.25)) << ',' << fmt(quartile(abs_err, 0.75))
          << ',' << fmt(quartile(remainder, 0.5)) << "\n";
      out.flush();
    }
  } catch (...) {
    out << "# INCOMPLETE\n";
    out.flush();
    throw;
  }
}

void run_kolmogorov(const ExperimentConfig& cfg, std::ostream& out) {
  run_kolmogorov_on(build_setup(cfg), cfg, out);
}

void run_coverage(const ExperimentConfig& cfg, std::ostream& out) {
  run_coverage_on(build_setup(cfg), cfg, out);
}

void run_variance_decay(const ExperimentConfig& cfg, std::ostream& out) {
  run_variance_decay_on(build_setup(cfg), cfg, out);
}

}  // namespace lsam
