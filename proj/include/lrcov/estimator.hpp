#pragma once

// Lag-window estimation of the long-run covariance kernel
//
//   C_N(t,s) = sum_i K(i/h) gamma_i(t,s),
//
// together with the spectral density at a fixed frequency, the h^{-q} bias
// kernel, the limiting covariance L of the centered estimator, the asymptotic
// MSE and the bandwidth that minimizes it, and PSD projection.

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lrcov/grid.hpp"
#include "lrcov/kernels.hpp"

namespace lrcov {

/// N curves observed on a common grid; row j of `data()` is X_{j+1}.
class CurveSample {
 public:
  /// Throws InputError on an empty matrix or any non-finite entry.
  explicit CurveSample(Eigen::MatrixXd data);

  int size() const noexcept { return static_cast<int>(data_.rows()); }
  int grid_size() const noexcept { return static_cast<int>(data_.cols()); }
  Grid grid() const { return Grid(grid_size()); }
  const Eigen::MatrixXd& data() const noexcept { return data_; }
  Curve curve(int j) const { return data_.row(j).transpose(); }
  Curve mean() const;
  /// X_j - mean, row-wise.
  Eigen::MatrixXd centered() const;

 private:
  Eigen::MatrixXd data_;
};

struct EstimatorOptions {
  /// Divide lag-i products by N - |i| instead of N.
  bool unbiased = false;
  /// Subtract the sample mean curve. Turn off only for processes known to be mean-zero.
  bool centered = true;
};

/// Empirical autocovariance surface at lag i; zero surface when |i| >= N.
/// gamma_{-i}(t,s) = gamma_i(s,t).
Surface autocov(const CurveSample& sample, int lag, EstimatorOptions options = {});

/// Autocovariances for lags 0..max_lag, with negative lags served by transposition.
class AutocovSet {
 public:
  AutocovSet(const CurveSample& sample, int max_lag, EstimatorOptions options = {});

  int n_obs() const noexcept { return n_obs_; }
  int max_lag() const noexcept { return static_cast<int>(surfaces_.size()) - 1; }
  const EstimatorOptions& options() const noexcept { return options_; }
  /// True when the lag lies outside the sample and the surface is zero by convention.
  bool beyond_sample(int lag) const noexcept { return lag >= n_obs_ || -lag >= n_obs_; }
  /// Throws ContractError for an in-sample lag that was not computed.
  Surface at(int lag) const;
  /// Lags 0..max_lag.
  std::span<const Surface> nonnegative() const noexcept { return surfaces_; }

 private:
  int n_obs_;
  int grid_size_;
  EstimatorOptions options_;
  std::vector<Surface> surfaces_;
};

struct LrcovEstimate {
  Surface surface;
  KernelSpec kernel;
  Bandwidth bandwidth;
  int n_obs = 0;
  /// Largest lag inside the window, min(N - 1, floor(c h)).
  int max_lag = 0;
  EstimatorOptions options;
  bool psd_projected = false;
};

/// Largest lag that can carry nonzero kernel weight.
int lag_window_extent(const KernelSpec& kernel, Bandwidth h, int n_obs);

/// Kernel lag-window estimate in O(N h G + N G^2) without forming any gamma_i.
LrcovEstimate estimate_lrcov(const CurveSample& sample, const KernelSpec& kernel, Bandwidth h,
                             EstimatorOptions options = {});

/// Literal evaluation over all lags -(N-1)..(N-1); test oracle for estimate_lrcov.
LrcovEstimate estimate_lrcov_naive(const CurveSample& sample, const KernelSpec& kernel,
                                   Bandwidth h, EstimatorOptions options = {});

struct SpectralDensityEstimate {
  double omega = 0.0;
  Surface real_part;
  Surface imag_part;
};

/// f_omega = (1/2pi) sum_j K(j/h) exp(-i omega j) gamma_j, omega in [0, 2pi).
SpectralDensityEstimate estimate_spectral_density(const CurveSample& sample,
                                                  const KernelSpec& kernel, Bandwidth h,
                                                  double omega, EstimatorOptions options = {});

struct BiasKernel {
  Surface surface;
  double q_char = 0.0;
  int max_lag = 0;
};

/// F = kappa * sum_{|l| <= max_lag} |l|^q gamma_l, from lag surfaces gamma_0..gamma_M
/// (lags missing from the list count as zero).
BiasKernel bias_kernel(std::span<const Surface> gammas, const KernelSpec& kernel, int max_lag);
BiasKernel bias_kernel(const AutocovSet& autocovs, const KernelSpec& kernel, int max_lag);

/// L(t,s,t',s') = [C(t,s)C(t',s') + C(t,t')C(s,s')] int K^2. Requires G <= 64.
Quartic asymptotic_covariance_L(const Surface& c, const KernelSpec& kernel);

/// E||Gamma_1||^2 = 2 (iint C)^2 int K^2.
double gamma1_norm_sq(const Surface& c, const KernelSpec& kernel);

/// (h/N) E||Gamma_1||^2 + h^{-2q} ||F||^2.
double amse(const Surface& c, const Surface& bias, const KernelSpec& kernel, double h, int n_obs);

struct BandwidthSelection {
  double h = 0.0;
  double c0 = 0.0;
  double f_norm = 0.0;
  double c_integral = 0.0;
  /// ||F|| = 0: no interior AMSE minimum, h = N^{1/(1+2q)} was used.
  bool fallback_used = false;
  /// Plug-in result was clamped to [1, N/2].
  bool clamped = false;
  /// h^q > N, outside the regime where the bias expansion is trustworthy.
  bool bias_regime_warning = false;
  double pilot_h = 0.0;
  int m_trunc = 0;
};

/// h_opt = c0 N^{1/(1+2q)}, c0 = (q||F||^2)^{1/(1+2q)} ((iint C)^2 int K^2)^{-1/(1+2q)}.
BandwidthSelection optimal_bandwidth(const Surface& c, const Surface& bias,
                                     const KernelSpec& kernel, int n_obs);

/// Pilot bandwidth used when the caller does not provide one: N^{1/5}.
double default_pilot_bandwidth(int n_obs);

/// Plug-in bandwidth: pilot C_N and gamma_l (l <= M) fed to optimal_bandwidth,
/// then clamped to [1, N/2]. M defaults to min(floor(pilot), floor(sqrt N)), at least 1.
BandwidthSelection plugin_bandwidth(const CurveSample& sample, const KernelSpec& kernel,
                                    std::optional<Bandwidth> pilot = std::nullopt,
                                    std::optional<int> m_trunc = std::nullopt);

/// Nearest PSD surface: negative operator eigenvalues clipped to zero.
Surface project_psd(const Surface& s);
LrcovEstimate project_psd(const LrcovEstimate& estimate);

}  // namespace lrcov
