#pragma once

// Dynamic functional principal components: eigenpairs of the long-run
// covariance operator and their large-sample behaviour.
//
// Discretization: the operator of a surface S is the matrix S / G. Its matrix
// eigenvalues are the operator eigenvalues, and its unit eigenvectors scaled
// by sqrt(G) are L2-orthonormal eigenfunctions under the 1/G quadrature.

#include <vector>

#include <Eigen/Dense>

#include "lrcov/grid.hpp"
#include "lrcov/kernels.hpp"

namespace lrcov {

/// Relative gap below which two eigenvalues are treated as tied.
inline constexpr double kSeparationTolerance = 1e-8;

struct EigenSystem {
  /// Non-increasing.
  Eigen::VectorXd eigenvalues;
  /// Column l-1 holds v_l.
  Eigen::MatrixXd eigenfunctions;

  int size() const noexcept { return static_cast<int>(eigenvalues.size()); }
  /// 1-based.
  double value(int level) const { return eigenvalues[level - 1]; }
  Curve function(int level) const { return eigenfunctions.col(level - 1); }
  /// sum_l lambda_l v_l(t) v_l(s).
  Surface reconstruct() const;
};

/// Each eigenvector is sign-normalized so its largest-magnitude coordinate is positive.
EigenSystem eigendecompose(const Surface& s);

/// s * vhat with s = sign<vhat, vref>, and s = +1 on an exact tie.
Curve align_sign(const Curve& vhat, const Curve& vref);

struct SeparationReport {
  /// gaps[l-1] = lambda_l - lambda_{l+1} for l = 1..p.
  std::vector<double> gaps;
  double tolerance = 0.0;
  bool separated = true;
  /// First level whose gap is below tolerance, 0 if none.
  int offending_level = 0;
};

/// Checks lambda_1 > ... > lambda_p > lambda_{p+1} with gaps >= rel_tol * lambda_1.
SeparationReport check_separation(const Eigen::VectorXd& eigenvalues, int p,
                                  double rel_tol = kSeparationTolerance);
/// Throws PreconditionError naming the offending gap.
void require_separation(const Eigen::VectorXd& eigenvalues, int p,
                        double rel_tol = kSeparationTolerance);

/// N / h^{1 + 2q} at the given sample size and bandwidth.
double bias_balance(int n_obs, double h, const KernelSpec& kernel);

struct EigenvalueCltParams {
  double mean_shift = 0.0;
  double sd = 0.0;
};

/// Limit law of (N/h)^{1/2} (lambda_hat_l - lambda_l): normal with
/// sd = lambda_l sqrt(2 int K^2) and mean a * <F v_l, v_l>.
EigenvalueCltParams eigenvalue_clt_params(const EigenSystem& truth, const KernelSpec& kernel,
                                          int level);
EigenvalueCltParams eigenvalue_clt_params(const EigenSystem& truth, const KernelSpec& kernel,
                                          const Surface& bias, double a_limit, int level);

/// Deterministic shift of the eigenfunction limit:
/// a * sum_{k != l} v_k / (lambda_l - lambda_k) * iint F(u,s) v_l(u) v_k(s) du ds.
Curve eigenfunction_bias_shift(const EigenSystem& truth, const Surface& bias, double a_limit,
                               int level);

struct DeviationMsd {
  double value = 0.0;
  /// Upper bound on the omitted terms k > K_terms.
  double tail_bound = 0.0;
};

/// Mean of the limit of (N/h) ||s v_hat_l - v_l||^2:
/// lambda_l int K^2 sum_{k != l, k <= K_terms} lambda_k / (lambda_l - lambda_k)^2.
DeviationMsd eigenfunction_deviation_msd(const EigenSystem& truth, const KernelSpec& kernel,
                                         int level, int k_terms);

struct ConfidenceInterval {
  double low = 0.0;
  double high = 0.0;
  double half_width = 0.0;
  double z = 0.0;
};

/// lambda_hat_l +- z (h/N)^{1/2} lambda_hat_l sqrt(2 int K^2), bias treated as negligible.
ConfidenceInterval eigenvalue_ci(const EigenSystem& estimate, const KernelSpec& kernel,
                                 int n_obs, double h, int level, double confidence);

struct EigenInference {
  int p = 0;
  double a_limit = 0.0;
  std::vector<double> eigenvalue_sd;
  std::vector<double> eigenvalue_mean_shift;
  std::vector<double> eigenfunction_msd;
  std::vector<Curve> eigenfunction_bias;
  SeparationReport separation;
};

/// Bundles the limit parameters for levels 1..p. `bias` may be empty (no bias term).
EigenInference eigen_inference(const EigenSystem& truth, const KernelSpec& kernel,
                               const Surface& bias, double a_limit, int p);

}  // namespace lrcov
