#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "lsam/analysis.hpp"
#include "lsam/errors.hpp"
#include "lsam/rng.hpp"

using namespace lsam;

namespace {

struct TdProblem {
  FiniteMdp mdp;
  Policy policy;
  FeatureMap features;
  LsaInstance inst;
};

TdProblem garnet_td(int seed, double discount = 0.8, int d = 2) {
  TdProblem p;
  p.mdp = garnet_generate(6, 2, 3, 10 * seed + 1);
  p.mdp.discount = discount;
  p.policy = random_policy(p.mdp, 10 * seed + 2);
  p.features = random_features(6, d, 10 * seed + 3);
  p.inst = build_td_instance(p.mdp, p.policy, p.features);
  return p;
}

// Synthetic instance whose observation chain is i.i.d. (all kernel rows
// equal the stationary law).
LsaInstance iid_instance(const Matrix& a_bar, const Matrix& noise,
                         const Vector& pi) {
  LsaInstance inst;
  const auto z = noise.rows();
  const auto d = noise.cols();
  inst.a_bar = a_bar;
  inst.b_bar = Vector::Zero(d);
  inst.z_kernel = Matrix::Zero(z, z);
  for (Eigen::Index r = 0; r < z; ++r) inst.z_kernel.row(r) = pi.transpose();
  inst.z_stationary = pi;
  inst.noise_table = noise;
  inst.per_z_A.assign(z, a_bar);
  inst.per_z_b = Matrix::Zero(z, d);
  // center the noise under pi so the instance is coherent
  const Vector mean = noise.transpose() * pi;
  for (Eigen::Index r = 0; r < z; ++r) {
    inst.noise_table.row(r) -= mean.transpose();
  }
  inst.design = Matrix::Identity(d, d);
  inst.state_stationary = pi;
  return inst;
}

Matrix truncated_lag_sigma(const LsaInstance& inst, long lags) {
  const auto weighted = inst.z_stationary.asDiagonal();
  Matrix sigma = inst.noise_table.transpose() * weighted * inst.noise_table;
  Matrix propagated = inst.noise_table;
  for (long l = 1; l <= lags; ++l) {
    propagated = inst.z_kernel * propagated;
    const Matrix lag =
        inst.noise_table.transpose() * weighted * propagated;
    sigma += lag + lag.transpose();
  }
  return 0.5 * (sigma + sigma.transpose());
}

}  // namespace

TEST_CASE("garnet TD instance has a small coherent observation space") {
  const TdProblem p = garnet_td(1);
  CHECK(p.inst.z_count() <= 36);
  CHECK(p.inst.dim() == 2);
  for (long z = 0; z < p.inst.z_count(); ++z) {
    CHECK(std::abs(p.inst.z_kernel.row(z).sum() - 1.0) <= 1e-12);
  }
  CHECK(std::abs(p.inst.z_stationary.sum() - 1.0) <= 1e-10);

  // stationary average of the per-observation tables reproduces a_bar
  Matrix mean_a = Matrix::Zero(2, 2);
  Vector mean_eps = Vector::Zero(2);
  for (long z = 0; z < p.inst.z_count(); ++z) {
    mean_a += p.inst.z_stationary(z) * p.inst.per_z_A[z];
    mean_eps += p.inst.z_stationary(z) * p.inst.noise_table.row(z).transpose();
  }
  CHECK((mean_a - p.inst.a_bar).lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK(mean_eps.lpNorm<Eigen::Infinity>() <= 1e-10);

  // the observation stationary law is invariant under the observation kernel
  const double residual =
      (p.inst.z_stationary.transpose() * p.inst.z_kernel -
       p.inst.z_stationary.transpose())
          .lpNorm<Eigen::Infinity>();
  CHECK(residual <= 1e-10);
}

TEST_CASE("zero discount collapses the system matrix to the design") {
  const TdProblem p = garnet_td(2, 0.0);
  CHECK((p.inst.a_bar - p.inst.design).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("single-state instance solves the geometric series") {
  FiniteMdp mdp;
  mdp.n_states = 1;
  mdp.n_actions = 1;
  mdp.transition = {Matrix::Ones(1, 1)};
  mdp.reward = Matrix::Constant(1, 1, 0.7);
  mdp.discount = 0.5;
  Policy policy;
  policy.probs = Matrix::Ones(1, 1);
  FeatureMap features;
  features.features = Matrix::Ones(1, 1);
  features.dim = 1;

  const LsaInstance inst = build_td_instance(mdp, policy, features);
  CHECK(inst.a_bar(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(inst.b_bar(0) == doctest::Approx(0.7).epsilon(1e-14));
  const GroundTruth gt = ground_truth(inst);
  CHECK(gt.theta_star(0) == doctest::Approx(1.4).epsilon(1e-12));
}

TEST_CASE("theta_star solves the linear system across many instances") {
  for (int seed = 0; seed < 100; ++seed) {
    const TdProblem p = garnet_td(seed + 100);
    const GroundTruth gt = ground_truth(p.inst);
    CHECK((p.inst.a_bar * gt.theta_star - p.inst.b_bar)
              .lpNorm<Eigen::Infinity>() <= 1e-10);
  }
}

TEST_CASE("iid observation chain keeps only the zero-lag covariance") {
  Rng rng(42);
  Matrix noise(5, 2);
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 2; ++c) noise(r, c) = rng.normal();
  }
  Vector pi(5);
  pi << 0.1, 0.2, 0.3, 0.25, 0.15;
  const LsaInstance inst = iid_instance(Matrix::Identity(2, 2), noise, pi);
  const GroundTruth gt = ground_truth(inst);
  const Matrix expected = inst.noise_table.transpose() *
                          pi.asDiagonal() * inst.noise_table;
  CHECK((gt.sigma_eps - expected).lpNorm<Eigen::Infinity>() <= 1e-12);
  CHECK((gt.sigma_inf - expected).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("zero noise table yields zero covariances") {
  Vector pi = Vector::Constant(4, 0.25);
  const LsaInstance inst =
      iid_instance(2.0 * Matrix::Identity(2, 2), Matrix::Zero(4, 2), pi);
  const GroundTruth gt = ground_truth(inst);
  CHECK(gt.sigma_eps.lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(gt.sigma_inf.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("Poisson covariance agrees with the truncated lag sum") {
  for (int seed = 0; seed < 20; ++seed) {
    const TdProblem p = garnet_td(seed + 300);
    const GroundTruth gt = ground_truth(p.inst);

    CHECK((gt.sigma_eps - gt.sigma_eps.transpose()).lpNorm<Eigen::Infinity>() <=
          1e-10);
    const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(gt.sigma_eps)
                               .eigenvalues()
                               .minCoeff();
    CHECK(min_eig >= -1e-8);

    const auto t_mix = mixing_time(p.inst.z_kernel, 10L * 36 * 36);
    REQUIRE(t_mix.has_value());
    const Matrix oracle = truncated_lag_sigma(p.inst, 20 * *t_mix);
    CHECK((gt.sigma_eps - oracle).lpNorm<Eigen::Infinity>() <= 1e-6);
  }
}

TEST_CASE("sigma_u evaluates the quadratic form") {
  GroundTruth gt;
  gt.sigma_inf = Matrix::Identity(2, 2);
  Vector u(2);
  u << 1.0, 0.0;
  CHECK(sigma_u(gt, u) == doctest::Approx(1.0));

  gt.sigma_inf << 4.0, 0.0, 0.0, 0.0;
  CHECK(sigma_u(gt, u) == doctest::Approx(4.0));

  Matrix root(2, 2);
  root << 1.0, 0.3, 0.0, 0.7;
  gt.sigma_inf = root.transpose() * root;
  Vector v(2);
  v << std::sqrt(0.5), -std::sqrt(0.5);
  CHECK(sigma_u(gt, v) == doctest::Approx(v.dot(gt.sigma_inf * v)));

  Vector bad(2);
  bad << 1.0, 1.0;
  CHECK_THROWS_AS(sigma_u(gt, bad), InvalidArgumentError);
}

TEST_CASE("identity system gives the identity Lyapunov solution") {
  const StabilityReport report =
      stability(Matrix::Identity(3, 3), 2.0 * Matrix::Identity(3, 3));
  CHECK(report.hurwitz);
  CHECK((report.q_matrix - Matrix::Identity(3, 3)).lpNorm<Eigen::Infinity>() <=
        1e-12);
  CHECK(report.a_const == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(report.kappa_q == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("negative eigenvalue flips the hurwitz flag") {
  Matrix a(2, 2);
  a << -0.1, 0.0, 0.0, 1.0;
  const StabilityReport report = stability(a, Matrix::Identity(2, 2));
  CHECK(!report.hurwitz);
}

TEST_CASE("random stable systems satisfy residual and contraction") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 2 + trial % 3;
    Matrix m(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
    }
    const double min_real =
        Eigen::EigenSolver<Matrix>(m, false).eigenvalues().real().minCoeff();
    const Matrix a_bar =
        m + (std::abs(min_real) + 0.2) * Matrix::Identity(d, d);

    const Matrix p = Matrix::Identity(d, d);
    const StabilityReport report = stability(a_bar, p);
    REQUIRE(report.hurwitz);
    const Matrix residual =
        a_bar.transpose() * report.q_matrix + report.q_matrix * a_bar - p;
    CHECK(residual.lpNorm<Eigen::Infinity>() <= 1e-9);

    for (int k = 1; k <= 100; ++k) {
      const double alpha = report.alpha_max * double(k) / 100.0;
      const double norm = q_operator_norm(
          Matrix::Identity(d, d) - alpha * a_bar, report.q_matrix);
      CHECK(norm * norm <= 1.0 - alpha * report.a_const + 1e-10);
    }
  }
}

TEST_CASE("TD constants take their closed forms") {
  const TdProblem p = garnet_td(4, 0.8);
  const TdStabilityConstants td =
      td_stability_constants(p.inst, p.features, 0.8);
  CHECK(td.alpha_max == doctest::Approx(0.2 / 3.24).epsilon(1e-12));
  const double lambda_min =
      Eigen::SelfAdjointEigenSolver<Matrix>(p.inst.design)
          .eigenvalues()
          .minCoeff();
  CHECK(td.a == doctest::Approx(0.2 * lambda_min).epsilon(1e-12));

  // one-dimensional unit feature: design = 1, so a = 1 at zero discount
  FiniteMdp mdp;
  mdp.n_states = 1;
  mdp.n_actions = 1;
  mdp.transition = {Matrix::Ones(1, 1)};
  mdp.reward = Matrix::Constant(1, 1, 0.3);
  mdp.discount = 0.0;
  Policy policy;
  policy.probs = Matrix::Ones(1, 1);
  FeatureMap features;
  features.features = Matrix::Ones(1, 1);
  features.dim = 1;
  const LsaInstance unit = build_td_instance(mdp, policy, features);
  const TdStabilityConstants td0 = td_stability_constants(unit, features, 0.0);
  CHECK(td0.a == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(td0.alpha_max == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("TD contraction holds at sampled step sizes") {
  Rng rng(11);
  for (int seed = 0; seed < 5; ++seed) {
    const TdProblem p = garnet_td(seed + 600);
    const TdStabilityConstants td =
        td_stability_constants(p.inst, p.features, 0.8);
    for (int k = 0; k < 100; ++k) {
      const double alpha = td.alpha_max * rng.uniform_open();
      const Matrix contraction =
          Matrix::Identity(2, 2) - alpha * p.inst.a_bar;
      const double norm =
          contraction.jacobiSvd().singularValues().maxCoeff();
      CHECK(norm * norm <= 1.0 - alpha * td.a + 1e-8);
    }
  }
}

TEST_CASE("finite-n variance handles the degenerate and tiny cases") {
  Vector pi = Vector::Constant(4, 0.25);
  const LsaInstance zero_noise =
      iid_instance(Matrix::Identity(2, 2), Matrix::Zero(4, 2), pi);
  const GroundTruth gt_zero = ground_truth(zero_noise);
  const StepSchedule schedule{0.5, 0, 0.6};
  Vector u(2);
  u << 1.0, 0.0;
  CHECK(finite_n_variance(zero_noise, gt_zero, schedule, 100, u) == 0.0);

  Rng rng(13);
  Matrix noise(4, 2);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 2; ++c) noise(r, c) = rng.normal();
  }
  const LsaInstance inst = iid_instance(Matrix::Identity(2, 2), noise, pi);
  const GroundTruth gt = ground_truth(inst);
  const double expected = step_size(schedule, 2) * step_size(schedule, 2) *
                          u.dot(gt.sigma_eps * u) / 3.0;
  CHECK(finite_n_variance(inst, gt, schedule, 3, u) ==
        doctest::Approx(expected).epsilon(1e-14));
  CHECK_THROWS_AS(finite_n_variance(inst, gt, schedule, 2, u),
                  InvalidArgumentError);
}

TEST_CASE("finite-n variance matches the quadratic brute force") {
  const auto brute_force = [](const LsaInstance& inst, const GroundTruth& gt,
                              const StepSchedule& schedule, long n,
                              const Vector& u) {
    const int d = inst.dim();
    double total = 0.0;
    for (long l = 2; l <= n - 1; ++l) {
      Matrix s_l = Matrix::Zero(d, d);
      for (long k = l; k <= n - 1; ++k) {
        Matrix g = Matrix::Identity(d, d);
        for (long j = l + 1; j <= k; ++j) {
          g = (Matrix::Identity(d, d) - step_size(schedule, j) * inst.a_bar) *
              g;
        }
        s_l += g;
      }
      const Matrix q_l = step_size(schedule, l) * s_l;
      total += u.dot(q_l * gt.sigma_eps * q_l.transpose() * u);
    }
    return total / double(n);
  };

  const StepSchedule schedule{0.4, 2, 0.6};
  Vector u(2);
  u << std::sqrt(0.5), std::sqrt(0.5);

  Rng rng(17);
  Matrix noise(4, 2);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 2; ++c) noise(r, c) = rng.normal();
  }
  Vector pi = Vector::Constant(4, 0.25);
  const LsaInstance iid = iid_instance(Matrix::Identity(2, 2), noise, pi);
  const GroundTruth gt_iid = ground_truth(iid);
  for (long n : {3L, 17L, 50L, 200L}) {
    CHECK(finite_n_variance(iid, gt_iid, schedule, n, u) ==
          doctest::Approx(brute_force(iid, gt_iid, schedule, n, u))
              .epsilon(1e-10));
  }

  const TdProblem p = garnet_td(5);
  const GroundTruth gt = ground_truth(p.inst);
  const TdStabilityConstants td =
      td_stability_constants(p.inst, p.features, 0.8);
  const StepSchedule td_schedule{0.9 * td.alpha_max, 0, 0.6};
  for (long n : {50L, 200L}) {
    CHECK(finite_n_variance(p.inst, gt, td_schedule, n, u) ==
          doctest::Approx(brute_force(p.inst, gt, td_schedule, n, u))
              .epsilon(1e-10));
  }
}

TEST_CASE("finite-n variance approaches the limit variance") {
  const TdProblem p = garnet_td(6);
  const GroundTruth gt = ground_truth(p.inst);
  const TdStabilityConstants td =
      td_stability_constants(p.inst, p.features, 0.8);
  const StepSchedule schedule{0.9 * td.alpha_max, 0, 0.6};
  Vector u(2);
  u << 1.0, 0.0;
  const double target = sigma_u(gt, u);
  double previous = std::numeric_limits<double>::infinity();
  for (long n : {1000L, 10000L, 100000L}) {
    const double err =
        std::abs(finite_n_variance(p.inst, gt, schedule, n, u) - target);
    CHECK(err <= previous * 1.1);
    previous = err;
  }
}

TEST_CASE("ground truth serializes to JSON") {
  const TdProblem p = garnet_td(7);
  const GroundTruth gt = ground_truth(p.inst);
  const std::string text = ground_truth_to_json(gt);
  CHECK(text.find("theta_star") != std::string::npos);
  CHECK(text.find("sigma_inf") != std::string::npos);
  const StabilityReport report =
      stability(p.inst.a_bar, Matrix::Identity(2, 2));
  const std::string stab_text = stability_to_json(report);
  CHECK(stab_text.find("alpha_max") != std::string::npos);
}
