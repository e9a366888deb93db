#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <vector>

#include "lsam/analysis.hpp"
#include "lsam/errors.hpp"
#include "lsam/lsa.hpp"
#include "lsam/rng.hpp"
#include "lsam/stats.hpp"

using namespace lsam;

namespace {

struct TdProblem {
  FiniteMdp mdp;
  Policy policy;
  FeatureMap features;
  LsaInstance inst;
  GroundTruth gt;
  TdStabilityConstants td;
};

TdProblem garnet_td(int seed) {
  TdProblem p;
  p.mdp = garnet_generate(6, 2, 3, 20 * seed + 1);
  p.mdp.discount = 0.8;
  p.policy = random_policy(p.mdp, 20 * seed + 2);
  p.features = random_features(6, 2, 20 * seed + 3);
  p.inst = build_td_instance(p.mdp, p.policy, p.features);
  p.gt = ground_truth(p.inst);
  p.td = td_stability_constants(p.inst, p.features, 0.8);
  return p;
}

// Scalar instance theta_k = (1 - alpha_k A) theta_{k-1} + alpha_k b with a
// single deterministic observation.
LsaInstance scalar_instance(double a, double b) {
  LsaInstance inst;
  inst.a_bar = Matrix::Constant(1, 1, a);
  inst.b_bar = Vector::Constant(1, b);
  inst.z_kernel = Matrix::Ones(1, 1);
  inst.z_stationary = Vector::Ones(1);
  inst.noise_table = Matrix::Zero(1, 1);
  inst.per_z_A.assign(1, inst.a_bar);
  inst.per_z_b = Matrix::Constant(1, 1, b);
  inst.design = Matrix::Ones(1, 1);
  inst.state_stationary = Vector::Ones(1);
  return inst;
}

}  // namespace

TEST_CASE("step sizes follow the power schedule") {
  CHECK(step_size(StepSchedule{1.0, 0, 0.5}, 4) ==
        doctest::Approx(0.5).epsilon(1e-15));
  CHECK(step_size(StepSchedule{0.5, 8, 0.6}, 1) ==
        doctest::Approx(0.5 * std::pow(9.0, -0.6)).epsilon(1e-15));
  const StepSchedule schedule{0.3, 5, 0.7};
  double previous = step_size(schedule, 1);
  for (long k = 2; k <= 1'000'000; k = k < 100 ? k + 1 : k * 3) {
    const double alpha = step_size(schedule, k);
    CHECK(alpha <= previous);
    CHECK(alpha > 0.0);
    previous = alpha;
  }
  CHECK_THROWS_AS(step_size(schedule, 0), InvalidArgumentError);
  CHECK_THROWS_AS(StepSchedule{-1.0, 0, 0.6}.validate(), InvalidArgumentError);
  CHECK_THROWS_AS(StepSchedule{0.1, 0, 0.3}.validate(), InvalidArgumentError);
}

TEST_CASE("theta_star is a fixed point when the noise vanishes") {
  const LsaInstance inst = scalar_instance(0.5, 0.35);
  const GroundTruth gt = ground_truth(inst);
  const Vector theta0 = Vector::Constant(1, gt.theta_star(0));
  const LsaTrajectory traj =
      run_lsa(inst, StepSchedule{0.5, 0, 0.6}, 1000, theta0, 9);
  for (long k = 0; k < traj.n; ++k) {
    CHECK(std::abs(traj.iterates(k, 0) - gt.theta_star(0)) <= 1e-12);
  }
}

TEST_CASE("deterministic scalar recursion matches its closed form") {
  const LsaInstance inst = scalar_instance(1.0, 0.0);
  const StepSchedule schedule{0.9, 1, 0.5};
  const LsaTrajectory traj =
      run_lsa(inst, schedule, 500, Vector::Ones(1), 123);
  double product = 1.0;
  CHECK(traj.iterates(0, 0) == 1.0);
  for (long k = 1; k < traj.n; ++k) {
    product *= 1.0 - step_size(schedule, k);
    CHECK(traj.iterates(k, 0) == doctest::Approx(product).epsilon(1e-12));
  }
}

TEST_CASE("identical arguments give bit-identical trajectories") {
  const TdProblem p = garnet_td(1);
  const StepSchedule schedule{0.9 * p.td.alpha_max, 0, 0.6};
  const Vector theta0 = Vector::Zero(2);
  const LsaTrajectory a = run_lsa(p.inst, schedule, 5000, theta0, 77);
  const LsaTrajectory b = run_lsa(p.inst, schedule, 5000, theta0, 77);
  CHECK((a.iterates.array() == b.iterates.array()).all());
  CHECK((a.pr_average.array() == b.pr_average.array()).all());
  const LsaTrajectory c = run_lsa(p.inst, schedule, 5000, theta0, 78);
  CHECK(!(a.iterates.array() == c.iterates.array()).all());
}

TEST_CASE("stored average equals the recomputed compensated mean") {
  const TdProblem p = garnet_td(2);
  const StepSchedule schedule{0.9 * p.td.alpha_max, 0, 0.6};
  const LsaTrajectory traj =
      run_lsa(p.inst, schedule, 20000, Vector::Zero(2), 5);
  const Vector recomputed = compute_pr_average(traj.iterates);
  CHECK((traj.pr_average - recomputed).lpNorm<Eigen::Infinity>() <=
        1e-12 * std::max(1.0, recomputed.lpNorm<Eigen::Infinity>()));
}

TEST_CASE("streaming average agrees with the batch average") {
  const TdProblem p = garnet_td(3);
  const StepSchedule schedule{0.9 * p.td.alpha_max, 0, 0.6};
  const LsaTrajectory traj =
      run_lsa(p.inst, schedule, 50000, Vector::Zero(2), 6);
  NeumaierAcc online[2];
  for (long k = 0; k < traj.n; ++k) {
    online[0].add(traj.iterates(k, 0));
    online[1].add(traj.iterates(k, 1));
  }
  for (int j = 0; j < 2; ++j) {
    const double streamed = online[j].value() / double(traj.n);
    CHECK(std::abs(streamed - traj.pr_average(j)) <=
          1e-12 * std::max(1.0, std::abs(streamed)));
  }
}

TEST_CASE("contraction-safe steps never trip the divergence guard") {
  for (int instance = 0; instance < 10; ++instance) {
    const TdProblem p = garnet_td(100 + instance);
    const StepSchedule schedule{0.9 * p.td.alpha_max, 0, 0.6};
    for (int rep = 0; rep < 10; ++rep) {
      CHECK_NOTHROW(run_lsa(p.inst, schedule, 100000, Vector::Zero(2),
                            mix_seed(instance, rep)));
    }
  }
}

TEST_CASE("averaged error shrinks with the horizon in the median") {
  const TdProblem p = garnet_td(4);
  const StepSchedule schedule{0.9 * p.td.alpha_max, 0, 0.6};
  std::vector<double> errs;
  double previous = std::numeric_limits<double>::infinity();
  for (long n : {1000L, 10000L, 100000L}) {
    errs.clear();
    for (int rep = 0; rep < 50; ++rep) {
      const LsaTrajectory traj = run_lsa(p.inst, schedule, n, Vector::Zero(2),
                                         mix_seed(901, n, rep));
      errs.push_back((traj.pr_average - p.gt.theta_star).norm());
    }
    const double med = median(errs);
    CHECK(med < previous);
    previous = med;
  }
}

TEST_CASE("burn-in start is deterministic and distinct") {
  const TdProblem p = garnet_td(5);
  const StepSchedule schedule{0.9 * p.td.alpha_max, 0, 0.6};
  const LsaTrajectory a =
      run_lsa(p.inst, schedule, 1000, Vector::Zero(2), 31, 100);
  const LsaTrajectory b =
      run_lsa(p.inst, schedule, 1000, Vector::Zero(2), 31, 100);
  CHECK((a.iterates.array() == b.iterates.array()).all());
}

TEST_CASE("observation recording matches the trajectory length") {
  const TdProblem p = garnet_td(6);
  const StepSchedule schedule{0.9 * p.td.alpha_max, 0, 0.6};
  const LsaTrajectory traj = run_lsa(p.inst, schedule, 500, Vector::Zero(2),
                                     3, 0, /*record_observations=*/true);
  CHECK(static_cast<long>(traj.z_path.size()) == traj.n - 1);
  for (const auto z : traj.z_path) {
    CHECK(z >= 0);
    CHECK(z < p.inst.z_count());
  }
}

TEST_CASE("projection statistic scales and signs correctly") {
  GroundTruth gt;
  gt.theta_star = Vector::Zero(2);

  LsaTrajectory traj;
  traj.n = 4;
  traj.iterates.resize(4, 2);
  traj.iterates.setZero();
  traj.pr_average = Vector::Zero(2);
  Vector u(2);
  u << 1.0, 0.0;
  CHECK(pr_error_projection(traj, gt, u) == 0.0);

  traj.pr_average << 0.5, 0.0;
  CHECK(pr_error_projection(traj, gt, u) == doctest::Approx(1.0));
  CHECK(pr_error_projection(traj, gt, -u) == doctest::Approx(-1.0));
}

TEST_CASE("unstable updates trip the divergence error") {
  LsaInstance inst = scalar_instance(-1.0, 0.0);
  CHECK_THROWS_AS(run_lsa(inst, StepSchedule{0.9, 0, 0.5}, 100000,
                          Vector::Ones(1), 1),
                  DivergenceError);
}

TEST_CASE("trajectory files round-trip") {
  const TdProblem p = garnet_td(7);
  const StepSchedule schedule{0.9 * p.td.alpha_max, 0, 0.6};
  const LsaTrajectory traj =
      run_lsa(p.inst, schedule, 300, Vector::Zero(2), 44);
  const std::string path = "traj_roundtrip.bin";
  save_trajectory(traj, path);
  const LsaTrajectory back = load_trajectory(path);
  CHECK(back.n == traj.n);
  CHECK((back.iterates.array() == traj.iterates.array()).all());
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_trajectory("does_not_exist.bin"), Error);
}
