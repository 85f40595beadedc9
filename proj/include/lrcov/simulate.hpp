#pragma once

// Gaussian functional time series with closed-form autocovariances.
//
// Innovations are eps_j(t) = sum_k sigma_k Z_{jk} phi_k(t) on the Fourier
// basis, so Sigma(t,s) = sum_k sigma_k^2 phi_k(t) phi_k(s) is exact on the
// grid. Coefficients act pointwise on curves:
//   IID   X_j = eps_j
//   FMA   X_j = eps_j + sum_{k=1}^m theta_k eps_{j-k}
//   FAR1  X_j = rho X_{j-1} + eps_j
//
// Random numbers: each stream is a std::mt19937_64 whose seed is the
// SplitMix64 mix of (seed, stream index); normals come from the Marsaglia
// polar method on 53-bit uniforms. Both algorithms are fixed, so output is
// bit-reproducible for a given (seed, stream).

#include <cstdint>
#include <random>
#include <vector>

#include "lrcov/estimator.hpp"
#include "lrcov/fpca.hpp"
#include "lrcov/grid.hpp"
#include "lrcov/kernels.hpp"

namespace lrcov {

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x) noexcept;
/// Seed of stream `index` derived from `seed`; distinct indices give unrelated streams.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) noexcept;

class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}
  double operator()();

 private:
  double uniform();

  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

struct GaussianNoiseSpec {
  /// Standard deviations of the J independent Fourier scores.
  std::vector<double> sigmas{1.0};

  int basis_size() const noexcept { return static_cast<int>(sigmas.size()); }
  /// Sigma(t,s) on the grid.
  Surface covariance(const Grid& grid) const;
};

enum class DgpKind { IID, FMA, FAR1 };

struct DgpSpec {
  DgpKind kind = DgpKind::IID;
  /// theta_1..theta_m (FMA only).
  std::vector<double> thetas;
  /// AR coefficient (FAR1 only), |rho| < 1.
  double rho = 0.0;
  GaussianNoiseSpec noise;
  std::uint64_t seed = 0;
  int burn_in = 200;

  /// Throws ConfigError on invalid parameters.
  void validate() const;
};

/// N curves from stream `stream` of spec.seed. Stream 0 is the default path.
CurveSample generate(const DgpSpec& spec, int n_obs, const Grid& grid, std::uint64_t stream = 0);

struct TruthSet {
  Surface noise_covariance;
  /// gamma_0..gamma_M; lags beyond M are zero (FMA) or below 1e-12 relative (FAR1).
  std::vector<Surface> gammas;
  Surface c;
  EigenSystem eigen;
  /// Present when the kernel has finite q.
  std::optional<BiasKernel> bias;

  /// gamma_l for any integer lag (transposed for l < 0, zero beyond the stored range).
  Surface gamma(int lag) const;
};

TruthSet truth(const DgpSpec& spec, const Grid& grid, const KernelSpec& kernel);

/// Scalar long-run factor: C = factor * Sigma.
double long_run_factor(const DgpSpec& spec);

}  // namespace lrcov
