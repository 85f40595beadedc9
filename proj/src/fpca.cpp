#include "lrcov/fpca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "lrcov/errors.hpp"
#include "lrcov/normal.hpp"

namespace lrcov {

namespace {

void require_level(const EigenSystem& system, int level) {
  if (level < 1 || level > system.size()) {
    throw ContractError("eigen level " + std::to_string(level) + " outside 1.." +
                        std::to_string(system.size()));
  }
}

}  // namespace

Surface EigenSystem::reconstruct() const {
  return eigenfunctions * eigenvalues.asDiagonal() * eigenfunctions.transpose();
}

EigenSystem eigendecompose(const Surface& s) {
  if (s.rows() != s.cols() || s.size() == 0) throw DimensionError("eigendecompose: surface not square");
  if (!is_symmetric(s)) {
    throw ContractError("eigendecompose: surface is not symmetric (max asymmetry " +
                        std::to_string(max_asymmetry(s)) + ")");
  }
  const auto g = s.rows();
  const double gd = static_cast<double>(g);
  const Eigen::MatrixXd op = 0.5 * (s + s.transpose()) / gd;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(op);
  if (solver.info() != Eigen::Success) throw ContractError("eigendecompose: eigensolver failed");

  EigenSystem out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenfunctions = solver.eigenvectors().rowwise().reverse() * std::sqrt(gd);
  for (Eigen::Index k = 0; k < g; ++k) {
    Eigen::Index arg = 0;
    out.eigenfunctions.col(k).cwiseAbs().maxCoeff(&arg);
    if (out.eigenfunctions(arg, k) < 0.0) out.eigenfunctions.col(k) *= -1.0;
  }
  return out;
}

Curve align_sign(const Curve& vhat, const Curve& vref) {
  return inner_product(vhat, vref) < 0.0 ? Curve(-vhat) : vhat;
}

SeparationReport check_separation(const Eigen::VectorXd& eigenvalues, int p, double rel_tol) {
  if (p < 1 || p >= eigenvalues.size() + 1) {
    throw ContractError("separation check: p = " + std::to_string(p) + " with " +
                        std::to_string(eigenvalues.size()) + " eigenvalues");
  }
  SeparationReport report;
  report.tolerance = rel_tol * std::abs(eigenvalues[0]);
  for (int l = 0; l < p; ++l) {
    const double next = l + 1 < eigenvalues.size() ? eigenvalues[l + 1] : 0.0;
    const double gap = eigenvalues[l] - next;
    report.gaps.push_back(gap);
    if (report.separated && !(gap >= report.tolerance && gap > 0.0)) {
      report.separated = false;
      report.offending_level = l + 1;
    }
  }
  return report;
}

void require_separation(const Eigen::VectorXd& eigenvalues, int p, double rel_tol) {
  const SeparationReport report = check_separation(eigenvalues, p, rel_tol);
  if (!report.separated) {
    const int l = report.offending_level;
    throw PreconditionError("eigenvalues not separated at level " + std::to_string(l) +
                            ": gap lambda_" + std::to_string(l) + " - lambda_" +
                            std::to_string(l + 1) + " = " +
                            std::to_string(report.gaps[static_cast<std::size_t>(l - 1)]) +
                            " < tolerance " + std::to_string(report.tolerance));
  }
}

double bias_balance(int n_obs, double h, const KernelSpec& kernel) {
  if (!kernel.has_finite_q()) return 0.0;
  return n_obs / std::pow(h, 1.0 + 2.0 * kernel.q_char());
}

EigenvalueCltParams eigenvalue_clt_params(const EigenSystem& truth, const KernelSpec& kernel,
                                          int level) {
  return eigenvalue_clt_params(truth, kernel, Surface(), 0.0, level);
}

EigenvalueCltParams eigenvalue_clt_params(const EigenSystem& truth, const KernelSpec& kernel,
                                          const Surface& bias, double a_limit, int level) {
  require_level(truth, level);
  require_separation(truth.eigenvalues, level);
  EigenvalueCltParams out;
  out.sd = truth.value(level) * std::sqrt(2.0 * kernel.ksq_integral());
  if (a_limit != 0.0 && bias.size() != 0) {
    const Curve v = truth.function(level);
    out.mean_shift = a_limit * inner_product(apply_operator(bias, v), v);
  }
  return out;
}

Curve eigenfunction_bias_shift(const EigenSystem& truth, const Surface& bias, double a_limit,
                               int level) {
  require_level(truth, level);
  const Curve vl = truth.function(level);
  Curve shift = Curve::Zero(vl.size());
  if (a_limit == 0.0 || bias.size() == 0) return shift;
  const double lambda_l = truth.value(level);
  const double tol = kSeparationTolerance * std::abs(truth.value(1));
  // iint F(u,s) v_l(u) v_k(s) = <F^T v_l, v_k>.
  const Curve ft_vl = apply_operator(Surface(bias.transpose()), vl);
  for (int k = 1; k <= truth.size(); ++k) {
    if (k == level) continue;
    const double gap = lambda_l - truth.value(k);
    if (std::abs(gap) < tol) {
      throw PreconditionError("eigenfunction bias: lambda_" + std::to_string(level) +
                              " is tied with lambda_" + std::to_string(k));
    }
    shift += truth.function(k) * (inner_product(ft_vl, truth.function(k)) / gap);
  }
  return a_limit * shift;
}

DeviationMsd eigenfunction_deviation_msd(const EigenSystem& truth, const KernelSpec& kernel,
                                         int level, int k_terms) {
  require_level(truth, level);
  if (k_terms < level || k_terms > truth.size()) {
    throw ContractError("eigenfunction_deviation_msd: K_terms must lie in [" +
                        std::to_string(level) + ", " + std::to_string(truth.size()) + "]");
  }
  require_separation(truth.eigenvalues, level);
  const double lambda_l = truth.value(level);
  const double tol = kSeparationTolerance * std::abs(truth.value(1));
  double sum = 0.0;
  for (int k = 1; k <= k_terms; ++k) {
    if (k == level) continue;
    const double gap = lambda_l - truth.value(k);
    if (std::abs(gap) < tol) {
      throw PreconditionError("eigenfunction_deviation_msd: lambda_" + std::to_string(level) +
                              " repeats as lambda_" + std::to_string(k));
    }
    sum += truth.value(k) / (gap * gap);
  }
  DeviationMsd out;
  const double scale = lambda_l * kernel.ksq_integral();
  out.value = scale * sum;
  if (k_terms < truth.size()) {
    // lambda_k <= lambda_{K+1} < lambda_l for every omitted k.
    double tail_mass = 0.0;
    for (int k = k_terms + 1; k <= truth.size(); ++k) tail_mass += std::max(truth.value(k), 0.0);
    const double gap = lambda_l - truth.value(k_terms + 1);
    out.tail_bound = gap > 0.0 ? scale * tail_mass / (gap * gap)
                               : std::numeric_limits<double>::infinity();
  }
  return out;
}

ConfidenceInterval eigenvalue_ci(const EigenSystem& estimate, const KernelSpec& kernel,
                                 int n_obs, double h, int level, double confidence) {
  require_level(estimate, level);
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw ContractError("confidence level must lie in (0, 1)");
  }
  if (n_obs < 1 || !(h > 0.0)) throw ContractError("eigenvalue_ci needs N >= 1 and h > 0");
  const double lambda = estimate.value(level);
  if (!(lambda > 0.0)) {
    throw PreconditionError("eigenvalue_ci: lambda_" + std::to_string(level) +
                            " = " + std::to_string(lambda) + " is not positive");
  }
  ConfidenceInterval ci;
  ci.z = normal_quantile(0.5 + 0.5 * confidence);
  ci.half_width = ci.z * std::sqrt(h / n_obs) * lambda * std::sqrt(2.0 * kernel.ksq_integral());
  ci.low = lambda - ci.half_width;
  ci.high = lambda + ci.half_width;
  return ci;
}

EigenInference eigen_inference(const EigenSystem& truth, const KernelSpec& kernel,
                               const Surface& bias, double a_limit, int p) {
  EigenInference out;
  out.p = p;
  out.a_limit = a_limit;
  out.separation = check_separation(truth.eigenvalues, p);
  require_separation(truth.eigenvalues, p);
  for (int l = 1; l <= p; ++l) {
    const EigenvalueCltParams clt = eigenvalue_clt_params(truth, kernel, bias, a_limit, l);
    out.eigenvalue_sd.push_back(clt.sd);
    out.eigenvalue_mean_shift.push_back(clt.mean_shift);
    out.eigenfunction_msd.push_back(
        eigenfunction_deviation_msd(truth, kernel, l, truth.size()).value);
    out.eigenfunction_bias.push_back(eigenfunction_bias_shift(truth, bias, a_limit, l));
  }
  return out;
}

}  // namespace lrcov
