#include "lsam/analysis.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <json.hpp>

#include "lsam/errors.hpp"

namespace lsam {
namespace {

constexpr double kUnitNormTol = 1e-10;

void require_unit(const Vector& u, const char* where) {
  if (std::abs(u.norm() - 1.0) > kUnitNormTol) {
    throw InvalidArgumentError(std::string(where) +
                               ": direction must be a unit vector");
  }
}

Eigen::PartialPivLU<Matrix> checked_lu(const Matrix& a_bar) {
  Eigen::JacobiSVD<Matrix> svd(a_bar);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (!(smin > 0.0) || smax / smin >= 1e12) {
    throw SingularMatrixError("a_bar is singular or too ill-conditioned");
  }
  return Eigen::PartialPivLU<Matrix>(a_bar);
}

nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json vector_json(const Vector& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

}  // namespace

LsaInstance build_td_instance(const FiniteMdp& mdp, const Policy& policy,
                              const FeatureMap& features) {
  mdp.validate();
  policy.validate();
  if (features.features.rows() != mdp.n_states ||
      features.features.cols() != features.dim || features.dim < 1) {
    throw InvalidArgumentError("build_td_instance: feature shape mismatch");
  }

  const InducedChain chain = induce_chain(mdp, policy);
  const int d = features.dim;
  const Matrix& phi = features.features;

  // Enumerate observations z = (s, a, s') with positive probability.
  LsaInstance inst;
  std::vector<double> weight;  // pi(a|s) P(s'|s,a) per observation
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double pa = policy.probs(s, a);
      if (pa <= 0.0) continue;
      for (int t = 0; t < mdp.n_states; ++t) {
        const double pt = mdp.transition[a](s, t);
        if (pt <= 0.0) continue;
        inst.z_labels.push_back({s, a, t});
        weight.push_back(pa * pt);
      }
    }
  }
  const auto z_count = static_cast<long>(inst.z_labels.size());

  inst.z_stationary = Vector::Zero(z_count);
  inst.per_z_A.reserve(z_count);
  inst.per_z_b = Matrix::Zero(z_count, d);
  for (long z = 0; z < z_count; ++z) {
    const auto [s, a, t] = inst.z_labels[z];
    inst.z_stationary(z) = chain.stationary(s) * weight[z];
    const Vector phi_s = phi.row(s).transpose();
    const Vector phi_t = phi.row(t).transpose();
    inst.per_z_A.push_back(phi_s *
                           (phi_s - mdp.discount * phi_t).transpose());
    inst.per_z_b.row(z) = (phi_s * mdp.reward(s, a)).transpose();
  }

  // Observation kernel: movement to any triple starting at s' = label.t.
  inst.z_kernel = Matrix::Zero(z_count, z_count);
  for (long z = 0; z < z_count; ++z) {
    const int landing = inst.z_labels[z][2];
    for (long w = 0; w < z_count; ++w) {
      if (inst.z_labels[w][0] == landing) inst.z_kernel(z, w) = weight[w];
    }
  }

  inst.a_bar = Matrix::Zero(d, d);
  inst.b_bar = Vector::Zero(d);
  for (long z = 0; z < z_count; ++z) {
    inst.a_bar.noalias() += inst.z_stationary(z) * inst.per_z_A[z];
    inst.b_bar.noalias() +=
        inst.z_stationary(z) * inst.per_z_b.row(z).transpose();
  }

  const Vector theta_star = checked_lu(inst.a_bar).solve(inst.b_bar);
  inst.noise_table = Matrix::Zero(z_count, d);
  for (long z = 0; z < z_count; ++z) {
    inst.noise_table.row(z) =
        ((inst.per_z_A[z] - inst.a_bar) * theta_star -
         (inst.per_z_b.row(z).transpose() - inst.b_bar))
            .transpose();
  }

  inst.state_stationary = chain.stationary;
  inst.design = Matrix::Zero(d, d);
  for (int s = 0; s < mdp.n_states; ++s) {
    inst.design.noalias() +=
        chain.stationary(s) * phi.row(s).transpose() * phi.row(s);
  }
  return inst;
}

GroundTruth ground_truth(const LsaInstance& inst) {
  const long z_count = inst.z_count();
  const int d = inst.dim();

  const auto lu = checked_lu(inst.a_bar);
  GroundTruth gt;
  gt.theta_star = lu.solve(inst.b_bar);

  // Poisson equation through the fundamental matrix
  // (I - P + 1 pi^T) eps_hat = eps, solved column-wise.
  const Matrix fundamental =
      Matrix::Identity(z_count, z_count) - inst.z_kernel +
      Vector::Ones(z_count) * inst.z_stationary.transpose();
  const Matrix eps_hat =
      fundamental.partialPivLu().solve(inst.noise_table);
  const double residual = (eps_hat - inst.z_kernel * eps_hat -
                           inst.noise_table)
                              .lpNorm<Eigen::Infinity>();
  if (residual > 1e-9) {
    throw PoissonSolveError("ground_truth: Poisson residual " +
                            std::to_string(residual) + " exceeds 1e-9");
  }

  const auto weighted = inst.z_stationary.asDiagonal();
  const Matrix cross = inst.noise_table.transpose() * weighted * eps_hat;
  const Matrix zero_lag =
      inst.noise_table.transpose() * weighted * inst.noise_table;
  Matrix sigma_eps = cross + cross.transpose() - zero_lag;
  gt.sigma_eps = 0.5 * (sigma_eps + sigma_eps.transpose());

  const Matrix half = lu.solve(gt.sigma_eps);
  Matrix sigma_inf = lu.solve(half.transpose()).transpose();
  gt.sigma_inf = 0.5 * (sigma_inf + sigma_inf.transpose());

  gt.design = inst.design.size() > 0 ? inst.design : Matrix::Zero(d, d);
  return gt;
}

double sigma_u(const GroundTruth& gt, const Vector& u) {
  require_unit(u, "sigma_u");
  const double value = u.dot(gt.sigma_inf * u);
  return value > 0.0 ? value : 0.0;
}

double q_operator_norm(const Matrix& b, const Matrix& q) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(q);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw InvalidArgumentError("q_operator_norm: q must be positive definite");
  }
  const Matrix sqrt_q = es.operatorSqrt();
  const Matrix inv_sqrt_q = es.operatorInverseSqrt();
  return (sqrt_q * b * inv_sqrt_q).jacobiSvd().singularValues().maxCoeff();
}

StabilityReport stability(const Matrix& a_bar, const Matrix& p) {
  const auto d = a_bar.rows();
  if (a_bar.cols() != d || p.rows() != d || p.cols() != d) {
    throw InvalidArgumentError("stability: shape mismatch");
  }
  if ((p - p.transpose()).lpNorm<Eigen::Infinity>() >
      1e-10 * std::max(1.0, p.lpNorm<Eigen::Infinity>())) {
    throw InvalidArgumentError("stability: p must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> pes(p);
  const double p_min = pes.eigenvalues().minCoeff();
  if (!(p_min > 0.0)) {
    throw InvalidArgumentError("stability: p must be positive definite");
  }

  StabilityReport report;
  const Eigen::VectorXcd eigs = Eigen::EigenSolver<Matrix>(a_bar, false)
                                    .eigenvalues();
  report.hurwitz = (eigs.real().array() > 0.0).all();

  // vec(a_bar^T Q) + vec(Q a_bar) = (I (x) a_bar^T + a_bar^T (x) I) vec(Q).
  Matrix system = Matrix::Zero(d * d, d * d);
  const Matrix at = a_bar.transpose();
  for (Eigen::Index i = 0; i < d; ++i) {
    system.block(i * d, i * d, d, d) += at;  // I (x) a_bar^T
    for (Eigen::Index j = 0; j < d; ++j) {
      system.block(i * d, j * d, d, d) +=
          at(i, j) * Matrix::Identity(d, d);  // a_bar^T (x) I
    }
  }
  Eigen::FullPivLU<Matrix> lu(system);
  if (!lu.isInvertible()) {
    throw NotHurwitzError("stability: Lyapunov system is singular");
  }
  Vector vec_p(d * d);
  for (Eigen::Index j = 0; j < d; ++j) {
    vec_p.segment(j * d, d) = p.col(j);
  }
  const Vector vec_q = lu.solve(vec_p);
  Matrix q(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    q.col(j) = vec_q.segment(j * d, d);
  }
  report.q_matrix = 0.5 * (q + q.transpose());

  if (!report.hurwitz) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    report.a_const = nan;
    report.alpha_max = nan;
    report.kappa_q = nan;
    return report;
  }

  Eigen::SelfAdjointEigenSolver<Matrix> qes(report.q_matrix);
  const double q_min = qes.eigenvalues().minCoeff();
  const double q_max = qes.eigenvalues().maxCoeff();
  if (!(q_min > 0.0)) {
    throw NotHurwitzError("stability: Lyapunov solution not positive definite");
  }
  report.kappa_q = q_max / q_min;
  report.a_const = p_min / (2.0 * q_max);
  const double a_norm_q = q_operator_norm(a_bar, report.q_matrix);
  report.alpha_max = std::min(
      p_min / (2.0 * report.kappa_q * a_norm_q * a_norm_q), q_max / p_min);
  return report;
}

TdStabilityConstants td_stability_constants(const LsaInstance& inst,
                                            const FeatureMap& features,
                                            double discount) {
  if (!(discount >= 0.0 && discount < 1.0)) {
    throw InvalidArgumentError(
        "td_stability_constants: discount must lie in [0, 1)");
  }
  Matrix design;
  if (inst.design.size() > 0) {
    design = inst.design;
  } else {
    if (inst.state_stationary.size() != features.features.rows()) {
      throw InvalidArgumentError(
          "td_stability_constants: missing design and state stationary");
    }
    design = Matrix::Zero(features.dim, features.dim);
    for (Eigen::Index s = 0; s < features.features.rows(); ++s) {
      design.noalias() += inst.state_stationary(s) *
                          features.features.row(s).transpose() *
                          features.features.row(s);
    }
  }
  const double lambda_min =
      Eigen::SelfAdjointEigenSolver<Matrix>(design).eigenvalues().minCoeff();
  if (!(lambda_min > 1e-10)) {
    throw DegenerateDesignError(
        "td_stability_constants: design matrix is degenerate");
  }
  TdStabilityConstants out;
  out.a = (1.0 - discount) * lambda_min;
  out.alpha_max = (1.0 - discount) / ((1.0 + discount) * (1.0 + discount));
  return out;
}

double finite_n_variance(const LsaInstance& inst, const GroundTruth& gt,
                         const StepSchedule& schedule, long n,
                         const Vector& u) {
  if (n < 3) {
    throw InvalidArgumentError("finite_n_variance: n must be >= 3");
  }
  schedule.validate();
  require_unit(u, "finite_n_variance");

  // With S_l = sum_{k=l}^{n-1} prod_{j=l+1}^{k} (I - alpha_j a_bar) the
  // factors commute, so w_l = S_l^T u satisfies
  //   w_{n-1} = u,  w_{l-1} = u + (I - alpha_l a_bar^T) w_l,
  // and the variance is (1/n) sum_{l=2}^{n-1} alpha_l^2 w_l^T sigma_eps w_l.
  const Matrix at = inst.a_bar.transpose();
  Vector w = u;
  double total = 0.0;
  for (long l = n - 1; l >= 2; --l) {
    const double alpha = step_size(schedule, l);
    total += alpha * alpha * w.dot(gt.sigma_eps * w);
    if (l > 2) {
      w = u + w - alpha * (at * w);
    }
  }
  const double value = total / double(n);
  return value > 0.0 ? value : 0.0;
}

std::string ground_truth_to_json(const GroundTruth& gt) {
  nlohmann::json doc;
  doc["theta_star"] = vector_json(gt.theta_star);
  doc["sigma_eps"] = matrix_json(gt.sigma_eps);
  doc["sigma_inf"] = matrix_json(gt.sigma_inf);
  doc["design"] = matrix_json(gt.design);
  return doc.dump(2);
}

std::string stability_to_json(const StabilityReport& report) {
  nlohmann::json doc;
  doc["q_matrix"] = matrix_json(report.q_matrix);
  doc["a"] = report.a_const;
  doc["alpha_max"] = report.alpha_max;
  doc["kappa_q"] = report.kappa_q;
  doc["hurwitz"] = report.hurwitz;
  return doc.dump(2);
}

}  // namespace lsam
