#include "lrcov/simulate.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "lrcov/errors.hpp"

namespace lrcov {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

double NormalStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double NormalStream::operator()() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  double u = 0.0;
  double v = 0.0;
  double r = 0.0;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    r = u * u + v * v;
  } while (r >= 1.0 || r == 0.0);
  const double scale = std::sqrt(-2.0 * std::log(r) / r);
  cached_ = v * scale;
  has_cached_ = true;
  return u * scale;
}

Surface GaussianNoiseSpec::covariance(const Grid& grid) const {
  const std::vector<Curve> basis = fourier_basis(grid, basis_size());
  Surface sigma = Surface::Zero(grid.size(), grid.size());
  for (std::size_t k = 0; k < basis.size(); ++k) {
    sigma += sigmas[k] * sigmas[k] * basis[k] * basis[k].transpose();
  }
  return sigma;
}

void DgpSpec::validate() const {
  if (noise.sigmas.empty()) throw ConfigError("noise needs at least one basis score");
  for (double s : noise.sigmas) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw ConfigError("noise standard deviations must be finite and >= 0");
    }
  }
  for (double t : thetas) {
    if (!std::isfinite(t)) throw ConfigError("FMA coefficients must be finite");
  }
  if (kind == DgpKind::FAR1) {
    if (!(std::abs(rho) < 1.0)) {
      throw ConfigError("FAR1 needs |rho| < 1, got " + std::to_string(rho));
    }
    if (burn_in < 0) throw ConfigError("burn_in must be >= 0");
  }
}

CurveSample generate(const DgpSpec& spec, int n_obs, const Grid& grid, std::uint64_t stream) {
  spec.validate();
  if (n_obs < 1) throw ConfigError("generate: N must be >= 1");
  const std::vector<Curve> basis = fourier_basis(grid, spec.noise.basis_size());
  const int j_count = spec.noise.basis_size();
  Eigen::MatrixXd phi(j_count, grid.size());
  for (int k = 0; k < j_count; ++k) phi.row(k) = spec.noise.sigmas[static_cast<std::size_t>(k)] * basis[static_cast<std::size_t>(k)].transpose();

  const int lead = spec.kind == DgpKind::FMA ? static_cast<int>(spec.thetas.size()) : 0;
  const int warm = spec.kind == DgpKind::FAR1 ? spec.burn_in : 0;
  const int total = warm + n_obs + lead;

  // Scores are drawn for eps_1..eps_N first, then the pre-sample innovations,
  // so FMA with zero coefficients reproduces the IID path.
  NormalStream normal(stream_seed(spec.seed, stream));
  Eigen::MatrixXd scores(total, j_count);
  auto draw_row = [&](int row) {
    for (int k = 0; k < j_count; ++k) scores(row, k) = normal();
  };
  const int first_in_sample = warm + lead;
  for (int r = first_in_sample; r < total; ++r) draw_row(r);
  for (int r = first_in_sample - 1; r >= 0; --r) draw_row(r);
  // Row r is the innovation at time r - first_in_sample + 1. Accumulated in a
  // fixed order so a row's value never depends on how many rows were drawn.
  Eigen::MatrixXd eps = Eigen::MatrixXd::Zero(total, grid.size());
  for (int r = 0; r < total; ++r) {
    for (int k = 0; k < j_count; ++k) eps.row(r) += scores(r, k) * phi.row(k);
  }

  Eigen::MatrixXd x(n_obs, grid.size());
  switch (spec.kind) {
    case DgpKind::IID:
      x = eps;
      break;
    case DgpKind::FMA:
      x = eps.bottomRows(n_obs);
      for (int k = 1; k <= lead; ++k) {
        x += spec.thetas[static_cast<std::size_t>(k - 1)] * eps.middleRows(lead - k, n_obs);
      }
      break;
    case DgpKind::FAR1: {
      Eigen::RowVectorXd state = Eigen::RowVectorXd::Zero(grid.size());
      for (int r = 0; r < total; ++r) {
        state = spec.rho * state + eps.row(r);
        if (r >= warm) x.row(r - warm) = state;
      }
      break;
    }
  }
  return CurveSample(std::move(x));
}

double long_run_factor(const DgpSpec& spec) {
  switch (spec.kind) {
    case DgpKind::IID:
      return 1.0;
    case DgpKind::FMA: {
      const double s = 1.0 + std::accumulate(spec.thetas.begin(), spec.thetas.end(), 0.0);
      return s * s;
    }
    case DgpKind::FAR1:
      return 1.0 / ((1.0 - spec.rho) * (1.0 - spec.rho));
  }
  return 0.0;
}

Surface TruthSet::gamma(int lag) const {
  const auto a = static_cast<std::size_t>(std::abs(lag));
  if (a >= gammas.size()) return Surface::Zero(c.rows(), c.cols());
  return lag < 0 ? Surface(gammas[a].transpose()) : gammas[a];
}

TruthSet truth(const DgpSpec& spec, const Grid& grid, const KernelSpec& kernel) {
  spec.validate();
  TruthSet out;
  out.noise_covariance = spec.noise.covariance(grid);
  const Surface& sigma = out.noise_covariance;

  std::vector<double> factors;  // scalar multiplier of Sigma at lag 0, 1, ...
  switch (spec.kind) {
    case DgpKind::IID:
      factors = {1.0};
      break;
    case DgpKind::FMA: {
      std::vector<double> th{1.0};
      th.insert(th.end(), spec.thetas.begin(), spec.thetas.end());
      for (std::size_t l = 0; l < th.size(); ++l) {
        double acc = 0.0;
        for (std::size_t k = 0; k + l < th.size(); ++k) acc += th[k] * th[k + l];
        factors.push_back(acc);
      }
      break;
    }
    case DgpKind::FAR1: {
      const double var = 1.0 / (1.0 - spec.rho * spec.rho);
      const double a = std::abs(spec.rho);
      // Stop once the remaining two-sided tail sum is below 1e-12 of the long-run factor.
      const double total = long_run_factor(spec);
      double term = var;
      for (int l = 0; l < 100000; ++l) {
        factors.push_back(term);
        const double tail = 2.0 * var * std::pow(a, l + 1) / (1.0 - a);
        if (tail <= 1e-12 * total) break;
        term *= spec.rho;
      }
      break;
    }
  }
  // Keep at least lag 1 so bias kernels have something to truncate at.
  if (factors.size() < 2) factors.push_back(0.0);
  for (double f : factors) out.gammas.push_back(f * sigma);

  out.c = long_run_factor(spec) * sigma;
  out.eigen = eigendecompose(out.c);
  if (kernel.has_finite_q()) {
    out.bias = bias_kernel(out.gammas, kernel, static_cast<int>(out.gammas.size()) - 1);
  }
  return out;
}

}  // namespace lrcov
