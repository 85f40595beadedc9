#pragma once

// Monte Carlo checks of the large-sample theory for the lag-window estimator:
// normality and covariance of projections of (N/h)^{1/2}(C_N - E C_N), the
// h^{-q} bias rate, and the eigenvalue / eigenfunction limit laws.
//
// Replications run in parallel but every replication is computed
// single-threaded from its own RNG stream, and all reductions are done in
// replication order, so reports are bit-identical for any worker count.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lrcov/estimator.hpp"
#include "lrcov/kernels.hpp"
#include "lrcov/simulate.hpp"

namespace lrcov {

class HRule {
 public:
  enum class Kind { Fixed, Power, Plugin };

  static HRule fixed(double h);
  /// h = a N^b.
  static HRule power(double a, double b);
  static HRule plugin();

  Kind kind() const noexcept { return kind_; }
  double h() const noexcept { return h_; }
  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  /// Bandwidth for a sample; plug-in runs plugin_bandwidth with default pilot.
  Bandwidth resolve(const CurveSample& sample, const KernelSpec& kernel) const;
  /// "5", "power:1,0.333", "plugin".
  std::string describe() const;
  /// Inverse of describe(). Throws ConfigError.
  static HRule parse(const std::string& text);

 private:
  Kind kind_ = Kind::Fixed;
  double h_ = 1.0;
  double a_ = 1.0;
  double b_ = 0.0;
};

struct ExperimentSpec {
  DgpSpec dgp;
  KernelSpec kernel = KernelSpec::bartlett();
  int n_obs = 0;
  int grid_size = 1;
  HRule h_rule = HRule::power(1.0, 1.0 / 3.0);
  int replications = 0;
  /// Test surfaces f for the projections iint (C_N - E*) f.
  std::vector<Surface> projections;
  std::vector<std::string> projection_names;
  /// 1-based eigen levels to track.
  std::vector<int> eigen_levels;
  std::uint64_t master_seed = 0;
  EstimatorOptions estimator;
  bool psd = false;
  /// <= 0: hardware concurrency (still capped by LRCOV_THREADS).
  int threads = 0;
};

struct Moments {
  double mean = 0.0;
  /// Unbiased (R - 1 divisor).
  double variance = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

struct ProjectionStats {
  std::string name;
  Moments moments;
  double ks_distance = 0.0;
  /// iiiint L f f from the true C.
  double predicted_variance = 0.0;
  /// Mean square of the scaled error about iint C f; includes the squared bias.
  double second_moment_about_truth = 0.0;
  /// One standard error of the variance estimate relative to the predicted
  /// variance under normality, sqrt(2 / (R - 1)).
  double variance_noise_bar = 0.0;
  std::vector<double> values;
};

struct EigenLevelStats {
  int level = 0;
  double lambda_true = 0.0;
  /// Of (N/h)^{1/2}(lambda_hat - lambda).
  double mean_error = 0.0;
  double sd_error = 0.0;
  double predicted_sd = 0.0;
  double predicted_mean_shift = 0.0;
  /// Mean of (N/h) ||s v_hat - v||^2.
  double mean_sq_deviation = 0.0;
  double predicted_msd = 0.0;
  std::vector<double> errors;
  std::vector<double> deviations;
};

struct McReport {
  int replications = 0;
  int n_obs = 0;
  int grid_size = 0;
  std::string kernel;
  std::string h_rule;
  double h_mean = 0.0;
  double h_min = 0.0;
  double h_max = 0.0;
  std::uint64_t master_seed = 0;
  int threads = 0;
  double runtime_seconds = 0.0;
  /// Monte Carlo mean of ||C_N - C||^2 and its standard error.
  double mean_sq_error = 0.0;
  double mean_sq_error_se = 0.0;
  /// ||mean(C_N) - C||.
  double bias_norm = 0.0;
  std::vector<ProjectionStats> projections;
  std::vector<EigenLevelStats> eigen_levels;
  /// Sample correlations of the eigenvalue errors, row-major over eigen_levels.
  std::vector<std::vector<double>> eigen_correlation;
};

McReport run_experiment(const ExperimentSpec& spec);

/// iiiint L(t,s,t',s') f(t,s) f(t',s') through two matrix products:
/// int K^2 [ (iint C f)^2 + iint iint C(t,t') C(s,s') f(t,s) f(t',s') ].
double predicted_projection_variance(const Surface& c, const KernelSpec& kernel, const Surface& f);

struct BiasRateResult {
  std::vector<double> h_grid;
  /// ||mean(C_N) - C|| per bandwidth.
  std::vector<double> errors;
  /// Monte Carlo standard error of the mean surface, in L2 norm.
  std::vector<double> mc_sd;
  /// h^{-q} ||F||.
  std::vector<double> predicted;
  double slope = 0.0;
  double intercept = 0.0;
  /// Every error is below 3 Monte Carlo standard errors.
  bool no_bias_detected = false;
  int replications = 0;
};

/// Regresses log ||mean C_N - C|| on log h for an IID or FMA process. Uses the
/// uncentered estimator with divisor N - |i|, whose mean is exactly
/// sum_i K(i/h) gamma_i, so the only deviation from C is the kernel bias.
BiasRateResult bias_rate_check(const DgpSpec& dgp, const KernelSpec& kernel, int n_obs,
                               std::span<const double> h_grid, int replications,
                               std::uint64_t master_seed, int grid_size = 1, int threads = 0);

/// sup_x |F_emp(x) - Phi((x - mean)/sd)|.
double ks_distance(std::span<const double> samples, double mean, double sd);

Moments sample_moments(std::span<const double> values);
double sample_correlation(std::span<const double> x, std::span<const double> y);

}  // namespace lrcov
