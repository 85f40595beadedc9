#include "lrcov/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "lrcov/errors.hpp"

namespace lrcov {

namespace {

void require_sample_size(const CurveSample& sample) {
  if (sample.size() < 2) {
    throw InputError("lag-window estimation needs N >= 2 curves, got " +
                     std::to_string(sample.size()));
  }
}

Eigen::MatrixXd working_data(const CurveSample& sample, const EstimatorOptions& options) {
  return options.centered ? sample.centered() : sample.data();
}

double lag_divisor(int n_obs, int lag, bool unbiased) {
  return unbiased ? static_cast<double>(n_obs - std::abs(lag)) : static_cast<double>(n_obs);
}

// Y^T Y with exact symmetry.
Eigen::MatrixXd symmetric_gram(const Eigen::MatrixXd& y) {
  Eigen::MatrixXd m = y.transpose() * y;
  return 0.5 * (m + m.transpose());
}

// sum_{i>=1} weights[i] * Y[0:N-i]^T Y[i:N], accumulated as Y^T Z with
// Z_j = sum_i weights[i] Y_{j+i}.
Eigen::MatrixXd lag_weighted_sum(const Eigen::MatrixXd& y, std::span<const double> weights) {
  const Eigen::Index n = y.rows();
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, y.cols());
  for (std::size_t i = 1; i < weights.size(); ++i) {
    const auto lag = static_cast<Eigen::Index>(i);
    if (weights[i] == 0.0 || lag >= n) continue;
    z.topRows(n - lag).noalias() += weights[i] * y.bottomRows(n - lag);
  }
  return y.transpose() * z;
}

}  // namespace

CurveSample::CurveSample(Eigen::MatrixXd data) : data_(std::move(data)) {
  if (data_.rows() == 0 || data_.cols() == 0) throw InputError("empty curve sample");
  if (!data_.allFinite()) throw InputError("curve sample contains non-finite values");
}

Curve CurveSample::mean() const { return data_.colwise().mean().transpose(); }

Eigen::MatrixXd CurveSample::centered() const {
  return data_.rowwise() - data_.colwise().mean();
}

Surface autocov(const CurveSample& sample, int lag, EstimatorOptions options) {
  const int n = sample.size();
  const int g = sample.grid_size();
  const int a = std::abs(lag);
  if (a >= n) return Surface::Zero(g, g);
  const Eigen::MatrixXd y = working_data(sample, options);
  const double d = lag_divisor(n, a, options.unbiased);
  if (a == 0) return symmetric_gram(y) / d;
  Surface gamma = (y.topRows(n - a).transpose() * y.bottomRows(n - a)) / d;
  if (lag < 0) gamma.transposeInPlace();
  return gamma;
}

AutocovSet::AutocovSet(const CurveSample& sample, int max_lag, EstimatorOptions options)
    : n_obs_(sample.size()), grid_size_(sample.grid_size()), options_(options) {
  if (max_lag < 0) throw ContractError("AutocovSet: max_lag must be >= 0");
  const Eigen::MatrixXd y = working_data(sample, options);
  surfaces_.reserve(static_cast<std::size_t>(max_lag) + 1);
  for (int i = 0; i <= max_lag; ++i) {
    if (i >= n_obs_) {
      surfaces_.push_back(Surface::Zero(grid_size_, grid_size_));
      continue;
    }
    const double d = lag_divisor(n_obs_, i, options.unbiased);
    if (i == 0) {
      surfaces_.push_back(symmetric_gram(y) / d);
    } else {
      surfaces_.push_back((y.topRows(n_obs_ - i).transpose() * y.bottomRows(n_obs_ - i)) / d);
    }
  }
}

Surface AutocovSet::at(int lag) const {
  if (beyond_sample(lag)) return Surface::Zero(grid_size_, grid_size_);
  const int a = std::abs(lag);
  if (a > max_lag()) {
    throw ContractError("AutocovSet: lag " + std::to_string(lag) + " was not computed (max " +
                        std::to_string(max_lag()) + ")");
  }
  const auto& s = surfaces_[static_cast<std::size_t>(a)];
  return lag < 0 ? Surface(s.transpose()) : s;
}

int lag_window_extent(const KernelSpec& kernel, Bandwidth h, int n_obs) {
  const double reach = std::floor(kernel.support() * h.value());
  const double cap = static_cast<double>(n_obs - 1);
  return static_cast<int>(std::max(0.0, std::min(reach, cap)));
}

LrcovEstimate estimate_lrcov(const CurveSample& sample, const KernelSpec& kernel, Bandwidth h,
                             EstimatorOptions options) {
  require_sample_size(sample);
  const int n = sample.size();
  const int extent = lag_window_extent(kernel, h, n);
  std::vector<double> weights(static_cast<std::size_t>(extent) + 1);
  for (int i = 0; i <= extent; ++i) {
    weights[static_cast<std::size_t>(i)] =
        kernel(i / h.value()) / lag_divisor(n, i, options.unbiased);
  }
  const Eigen::MatrixXd y = working_data(sample, options);
  // K(0) = 1, so the lag-0 term is gamma_0 itself.
  Surface c = symmetric_gram(y) / lag_divisor(n, 0, options.unbiased);
  if (extent > 0) {
    const Eigen::MatrixXd cross = lag_weighted_sum(y, weights);
    const Eigen::MatrixXd both = cross + cross.transpose();
    c += both;
  }
  return LrcovEstimate{std::move(c), kernel, h, n, extent, options, false};
}

LrcovEstimate estimate_lrcov_naive(const CurveSample& sample, const KernelSpec& kernel,
                                   Bandwidth h, EstimatorOptions options) {
  require_sample_size(sample);
  const int n = sample.size();
  const int g = sample.grid_size();
  const auto& x = sample.data();
  std::vector<double> mean(static_cast<std::size_t>(g), 0.0);
  if (options.centered) {
    for (int t = 0; t < g; ++t) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += x(j, t);
      mean[static_cast<std::size_t>(t)] = acc / n;
    }
  }
  auto dev = [&](int j, int t) { return x(j, t) - mean[static_cast<std::size_t>(t)]; };

  Surface c = Surface::Zero(g, g);
  for (int i = -(n - 1); i <= n - 1; ++i) {
    const double w = kernel(i / h.value());
    const double d = lag_divisor(n, i, options.unbiased);
    const int first = i >= 0 ? 0 : -i;
    const int last = i >= 0 ? n - i : n;
    for (int t = 0; t < g; ++t) {
      for (int s = 0; s < g; ++s) {
        double acc = 0.0;
        for (int j = first; j < last; ++j) acc += dev(j, t) * dev(j + i, s);
        c(t, s) += w * acc / d;
      }
    }
  }
  return LrcovEstimate{std::move(c), kernel, h, n, n - 1, options, false};
}

SpectralDensityEstimate estimate_spectral_density(const CurveSample& sample,
                                                  const KernelSpec& kernel, Bandwidth h,
                                                  double omega, EstimatorOptions options) {
  require_sample_size(sample);
  if (!(omega >= 0.0 && omega < 2.0 * std::numbers::pi)) {
    throw ContractError("spectral density frequency must lie in [0, 2pi), got " +
                        std::to_string(omega));
  }
  const int n = sample.size();
  const int extent = lag_window_extent(kernel, h, n);
  std::vector<double> cos_w(static_cast<std::size_t>(extent) + 1);
  std::vector<double> sin_w(static_cast<std::size_t>(extent) + 1);
  for (int i = 0; i <= extent; ++i) {
    const double base = kernel(i / h.value()) / lag_divisor(n, i, options.unbiased);
    cos_w[static_cast<std::size_t>(i)] = base * std::cos(omega * i);
    sin_w[static_cast<std::size_t>(i)] = base * std::sin(omega * i);
  }
  const Eigen::MatrixXd y = working_data(sample, options);
  const Eigen::MatrixXd ac = lag_weighted_sum(y, cos_w);
  const Eigen::MatrixXd as = lag_weighted_sum(y, sin_w);
  const double scale = 1.0 / (2.0 * std::numbers::pi);
  SpectralDensityEstimate out;
  out.omega = omega;
  out.real_part = scale * (cos_w[0] * symmetric_gram(y) + ac + ac.transpose());
  // gamma_{-j} = gamma_j^T, so the sine terms pair up antisymmetrically.
  out.imag_part = -scale * (as - as.transpose());
  return out;
}

BiasKernel bias_kernel(std::span<const Surface> gammas, const KernelSpec& kernel, int max_lag) {
  if (!kernel.has_finite_q()) {
    throw UnsupportedError("bias kernel is undefined for the " + kernel.name() +
                           " kernel (infinite characteristic exponent)");
  }
  if (max_lag < 1) throw ContractError("bias kernel truncation lag must be >= 1");
  if (gammas.empty()) throw ContractError("bias kernel needs at least gamma_0");
  const auto g = gammas.front().rows();
  const double q = kernel.q_char();
  Surface f = Surface::Zero(g, g);
  const int stored = static_cast<int>(gammas.size()) - 1;
  for (int l = 1; l <= std::min(max_lag, stored); ++l) {
    const Surface& gamma = gammas[static_cast<std::size_t>(l)];
    f += std::pow(static_cast<double>(l), q) * (gamma + gamma.transpose());
  }
  return BiasKernel{kernel.kappa() * f, q, max_lag};
}

BiasKernel bias_kernel(const AutocovSet& autocovs, const KernelSpec& kernel, int max_lag) {
  const int in_sample = std::min(max_lag, autocovs.n_obs() - 1);
  if (in_sample > autocovs.max_lag()) {
    throw ContractError("bias kernel truncation lag " + std::to_string(max_lag) +
                        " exceeds the computed autocovariances (max " +
                        std::to_string(autocovs.max_lag()) + ")");
  }
  return bias_kernel(autocovs.nonnegative(), kernel, max_lag);
}

Quartic asymptotic_covariance_L(const Surface& c, const KernelSpec& kernel) {
  if (c.rows() != c.cols()) throw DimensionError("asymptotic_covariance_L: surface not square");
  const int g = static_cast<int>(c.rows());
  Quartic l(g);
  const double ksq = kernel.ksq_integral();
  for (int t = 0; t < g; ++t)
    for (int s = 0; s < g; ++s)
      for (int tp = 0; tp < g; ++tp)
        for (int sp = 0; sp < g; ++sp)
          l(t, s, tp, sp) = (c(t, s) * c(tp, sp) + c(t, tp) * c(s, sp)) * ksq;
  return l;
}

double gamma1_norm_sq(const Surface& c, const KernelSpec& kernel) {
  const double integral = surface_integral(c);
  return 2.0 * integral * integral * kernel.ksq_integral();
}

double amse(const Surface& c, const Surface& bias, const KernelSpec& kernel, double h,
            int n_obs) {
  if (!kernel.has_finite_q()) throw UnsupportedError("amse needs a finite characteristic exponent");
  if (!(h > 0.0) || n_obs < 1) throw ContractError("amse needs h > 0 and N >= 1");
  const double f_norm = l2_norm_surface(bias);
  return h / n_obs * gamma1_norm_sq(c, kernel) +
         std::pow(h, -2.0 * kernel.q_char()) * f_norm * f_norm;
}

BandwidthSelection optimal_bandwidth(const Surface& c, const Surface& bias,
                                     const KernelSpec& kernel, int n_obs) {
  if (!kernel.has_finite_q()) {
    throw UnsupportedError("AMSE bandwidth selection is undefined for the " + kernel.name() +
                           " kernel; use a fixed-rate rule such as h = a N^b");
  }
  if (n_obs < 1) throw ContractError("optimal_bandwidth needs N >= 1");
  const double q = kernel.q_char();
  const double exponent = 1.0 / (1.0 + 2.0 * q);
  BandwidthSelection sel;
  sel.c_integral = surface_integral(c);
  sel.f_norm = l2_norm_surface(bias);
  const double variance_scale = sel.c_integral * sel.c_integral * kernel.ksq_integral();
  const bool vanishing = std::abs(sel.c_integral) <= 1e-12 * l2_norm_surface(c);
  if (vanishing || !(variance_scale > 0.0) || !std::isfinite(variance_scale)) {
    throw InputError("degenerate long-run covariance: iint C = 0, no variance term to balance");
  }
  const double rate = std::pow(static_cast<double>(n_obs), exponent);
  if (sel.f_norm == 0.0) {
    sel.fallback_used = true;
    sel.c0 = 1.0;
  } else {
    sel.c0 = std::pow(q * sel.f_norm * sel.f_norm, exponent) * std::pow(variance_scale, -exponent);
  }
  sel.h = sel.c0 * rate;
  sel.bias_regime_warning = std::pow(sel.h, q) > n_obs;
  return sel;
}

double default_pilot_bandwidth(int n_obs) { return std::pow(static_cast<double>(n_obs), 0.2); }

BandwidthSelection plugin_bandwidth(const CurveSample& sample, const KernelSpec& kernel,
                                    std::optional<Bandwidth> pilot, std::optional<int> m_trunc) {
  require_sample_size(sample);
  const int n = sample.size();
  const Bandwidth pilot_h = pilot.value_or(Bandwidth(default_pilot_bandwidth(n)));
  int m = m_trunc.value_or(static_cast<int>(
      std::min(std::floor(pilot_h.value()), std::floor(std::sqrt(static_cast<double>(n))))));
  m = std::clamp(m, 1, std::max(1, n - 1));

  const LrcovEstimate pilot_c = estimate_lrcov(sample, kernel, pilot_h);
  const AutocovSet gammas(sample, m);
  const BiasKernel f = bias_kernel(gammas, kernel, m);
  BandwidthSelection sel = optimal_bandwidth(pilot_c.surface, f.surface, kernel, n);
  sel.pilot_h = pilot_h.value();
  sel.m_trunc = m;
  const double upper = std::max(1.0, n / 2.0);
  const double clamped = std::clamp(sel.h, 1.0, upper);
  sel.clamped = clamped != sel.h;
  sel.h = clamped;
  sel.bias_regime_warning = std::pow(sel.h, kernel.q_char()) > n;
  return sel;
}

Surface project_psd(const Surface& s) {
  if (!is_symmetric(s)) {
    throw ContractError("project_psd: surface is not symmetric (max asymmetry " +
                        std::to_string(max_asymmetry(s)) + ")");
  }
  if (s.size() == 0) return s;
  const Eigen::MatrixXd sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) throw ContractError("project_psd: eigensolver failed");
  const Eigen::VectorXd clipped = solver.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXd& v = solver.eigenvectors();
  Eigen::MatrixXd out = v * clipped.asDiagonal() * v.transpose();
  return 0.5 * (out + out.transpose());
}

LrcovEstimate project_psd(const LrcovEstimate& estimate) {
  LrcovEstimate out = estimate;
  out.surface = project_psd(estimate.surface);
  out.psd_projected = true;
  return out;
}

}  // namespace lrcov
