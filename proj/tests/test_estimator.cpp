#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "lrcov/errors.hpp"
#include "lrcov/estimator.hpp"
#include "lrcov/fpca.hpp"
#include "lrcov/simulate.hpp"
#include "oracles.hpp"

using namespace lrcov;

namespace {

CurveSample scalar(std::initializer_list<double> values) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(values.size()), 1);
  Eigen::Index i = 0;
  for (double v : values) m(i++, 0) = v;
  return CurveSample(m);
}

DgpSpec ma1(double theta, std::uint64_t seed) {
  DgpSpec spec;
  spec.kind = DgpKind::FMA;
  spec.thetas = {theta};
  spec.seed = seed;
  return spec;
}

double max_abs_diff(const Surface& a, const Surface& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("autocov on the two-point sample") {
  const CurveSample x = scalar({1.0, 3.0});
  CHECK(autocov(x, 0)(0, 0) == doctest::Approx(1.0));
  CHECK(autocov(x, 1)(0, 0) == doctest::Approx(-0.5));
  CHECK(autocov(x, -1)(0, 0) == doctest::Approx(-0.5));
  CHECK(autocov(x, 2).norm() == 0.0);
  CHECK(autocov(x, -2).norm() == 0.0);
  CHECK(autocov(x, 1, {.unbiased = true})(0, 0) == doctest::Approx(-1.0));
  CHECK(autocov(x, 0, {.centered = false})(0, 0) == doctest::Approx(5.0));
}

TEST_CASE("autocov matches the defining sum and the transpose relation") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + trial;
    const int g = 1 + trial % 5;
    const CurveSample x(oracle::random_matrix(n, g, rng));
    for (int lag = -n; lag <= n; ++lag) {
      for (bool unbiased : {false, true}) {
        for (bool centered : {false, true}) {
          const Surface got = autocov(x, lag, {.unbiased = unbiased, .centered = centered});
          const Surface want = oracle::autocov(x.data(), lag, centered, unbiased);
          CHECK(max_abs_diff(got, want) <= 1e-12);
        }
      }
      CHECK(max_abs_diff(autocov(x, -lag), autocov(x, lag).transpose()) == 0.0);
    }
  }
}

TEST_CASE("AutocovSet") {
  std::mt19937_64 rng(22);
  const CurveSample x(oracle::random_matrix(6, 3, rng));
  const AutocovSet set(x, 3);
  CHECK(set.max_lag() == 3);
  CHECK(set.n_obs() == 6);
  CHECK(max_abs_diff(set.at(-2), autocov(x, 2).transpose()) == 0.0);
  CHECK(set.at(7).norm() == 0.0);
  CHECK(set.beyond_sample(6));
  CHECK_FALSE(set.beyond_sample(5));
  CHECK_THROWS_AS(set.at(4), ContractError);
}

TEST_CASE("estimate_lrcov examples") {
  const CurveSample x = scalar({1.0, 3.0});
  const KernelSpec bartlett = KernelSpec::bartlett();
  CHECK(estimate_lrcov(x, bartlett, Bandwidth(1.0)).surface(0, 0) == doctest::Approx(1.0));
  CHECK(estimate_lrcov_naive(x, bartlett, Bandwidth(1.0)).surface(0, 0) == doctest::Approx(1.0));

  const CurveSample zero(Eigen::MatrixXd::Zero(10, 4));
  CHECK(estimate_lrcov_naive(zero, bartlett, Bandwidth(3.0)).surface.norm() == 0.0);
  CHECK(estimate_lrcov(zero, bartlett, Bandwidth(3.0)).surface.norm() == 0.0);

  CHECK_THROWS_AS(CurveSample{Eigen::MatrixXd(0, 3)}, InputError);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Ones(3, 2);
  bad(1, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(CurveSample{bad}, InputError);
}

TEST_CASE("weight only at lag 0 gives the sample covariance") {
  std::mt19937_64 rng(23);
  const CurveSample x(oracle::random_matrix(30, 5, rng));
  const Eigen::MatrixXd c = x.centered();
  const Surface sample_cov = c.transpose() * c / 30.0;
  for (double h : {0.3, 0.999, 1.0}) {
    const LrcovEstimate est = estimate_lrcov(x, KernelSpec::bartlett(), Bandwidth(h));
    CHECK(max_abs_diff(est.surface, sample_cov) <= 1e-12);
    CHECK(est.max_lag == (h < 1.0 ? 0 : 1));
    CHECK((est.surface.array() == autocov(x, 0).array()).all());
  }
}

TEST_CASE("iid Gaussian scalar data estimates C = 1") {
  DgpSpec spec;
  spec.seed = 4000;
  const CurveSample x = generate(spec, 4000, Grid(1));
  const double h = std::cbrt(4000.0);
  CHECK(std::abs(estimate_lrcov(x, KernelSpec::bartlett(), Bandwidth(h)).surface(0, 0) - 1.0) <= 0.15);
}

TEST_CASE("fast estimator equals the literal lag sum") {
  std::mt19937_64 rng(24);
  std::uniform_int_distribution<int> nd(2, 40);
  std::uniform_int_distribution<int> gd(1, 8);
  std::uniform_real_distribution<double> hd(0.2, 10.0);
  const std::vector<KernelSpec> kernels{KernelSpec::bartlett(), KernelSpec::parzen(),
                                        KernelSpec::tukey_hanning(), KernelSpec::flat_top(0.5)};
  for (int trial = 0; trial < 200; ++trial) {
    const int n = nd(rng);
    const int g = gd(rng);
    const double h = hd(rng);
    const KernelSpec& k = kernels[static_cast<std::size_t>(trial) % kernels.size()];
    const EstimatorOptions opts{.unbiased = trial % 3 == 1, .centered = trial % 5 != 4};
    const CurveSample x(oracle::random_matrix(n, g, rng) * (1.0 + trial % 7));
    const Surface fast = estimate_lrcov(x, k, Bandwidth(h), opts).surface;
    const Surface naive = estimate_lrcov_naive(x, k, Bandwidth(h), opts).surface;
    const Surface independent =
        oracle::lrcov(x.data(), [&](double u) { return k(u); }, h, opts.centered, opts.unbiased);
    CAPTURE(n);
    CAPTURE(g);
    CAPTURE(h);
    CHECK(max_abs_diff(fast, naive) <= 1e-10);
    CHECK(max_abs_diff(naive, independent) <= 1e-10);
  }
}

TEST_CASE("centered estimate is exactly symmetric") {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 30; ++trial) {
    const CurveSample x(oracle::random_matrix(50, 1 + trial % 9, rng));
    for (const KernelSpec& k : {KernelSpec::bartlett(), KernelSpec::parzen()}) {
      const Surface s = estimate_lrcov(x, k, Bandwidth(1.0 + trial)).surface;
      CHECK((s.array() == s.transpose().array()).all());
    }
  }
}

TEST_CASE("lag window extent") {
  CHECK(lag_window_extent(KernelSpec::bartlett(), Bandwidth(4.0), 100) == 4);
  CHECK(lag_window_extent(KernelSpec::bartlett(), Bandwidth(4.5), 100) == 4);
  CHECK(lag_window_extent(KernelSpec::bartlett(), Bandwidth(400.0), 100) == 99);
}

TEST_CASE("spectral density") {
  std::mt19937_64 rng(26);
  const KernelSpec k = KernelSpec::parzen();
  for (int trial = 0; trial < 20; ++trial) {
    const CurveSample x(oracle::random_matrix(25, 1 + trial % 6, rng));
    const Bandwidth h(1.5 + trial * 0.4);
    const auto at0 = estimate_spectral_density(x, k, h, 0.0);
    const Surface c = estimate_lrcov(x, k, h).surface;
    CHECK(at0.imag_part.cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(max_abs_diff(2.0 * std::numbers::pi * at0.real_part, c) <= 1e-10 * std::max(1.0, c.cwiseAbs().maxCoeff()));
    const auto at_pi = estimate_spectral_density(x, k, h, std::numbers::pi);
    CHECK(at_pi.imag_part.cwiseAbs().maxCoeff() <= 1e-10);
    const auto at1 = estimate_spectral_density(x, k, h, 1.0);
    CHECK(max_abs_diff(at1.imag_part, -at1.imag_part.transpose()) <= 1e-12);
  }
  CHECK_THROWS_AS(estimate_spectral_density(scalar({1, 2, 3}), k, Bandwidth(2.0), 2.0 * std::numbers::pi), ContractError);
  CHECK_THROWS_AS(estimate_spectral_density(scalar({1, 2, 3}), k, Bandwidth(2.0), -0.1), ContractError);
}

TEST_CASE("white noise has a flat spectral density") {
  DgpSpec spec;
  spec.seed = 77;
  const CurveSample x = generate(spec, 4000, Grid(1));
  const double g0 = autocov(x, 0)(0, 0);
  for (double omega : {0.0, std::numbers::pi / 2.0, std::numbers::pi}) {
    const auto f = estimate_spectral_density(x, KernelSpec::bartlett(), Bandwidth(std::cbrt(4000.0)), omega);
    CHECK(f.real_part(0, 0) == doctest::Approx(g0 / (2.0 * std::numbers::pi)).epsilon(0.2));
  }
}

TEST_CASE("bias kernel") {
  const KernelSpec bartlett = KernelSpec::bartlett();
  const Grid grid(1);

  DgpSpec iid;
  const TruthSet ti = truth(iid, grid, bartlett);
  CHECK(bias_kernel(ti.gammas, bartlett, 5).surface.norm() == 0.0);

  const TruthSet t = truth(ma1(0.5, 0), grid, bartlett);
  const BiasKernel f = bias_kernel(t.gammas, bartlett, 1);
  CHECK(f.surface(0, 0) == doctest::Approx(-1.0 * 2.0 * 0.5));
  CHECK(f.q_char == 1.0);
  CHECK(f.max_lag == 1);
  CHECK(bias_kernel(t.gammas, bartlett, 6).surface(0, 0) == f.surface(0, 0));

  DgpSpec ma3 = ma1(0.4, 0);
  ma3.thetas = {0.4, -0.3, 0.2};
  ma3.noise.sigmas = {1.0, 0.5, 0.25};
  const KernelSpec parzen = KernelSpec::parzen();
  const TruthSet t3 = truth(ma3, Grid(8), parzen);
  CHECK(max_abs_diff(bias_kernel(t3.gammas, parzen, 3).surface, bias_kernel(t3.gammas, parzen, 8).surface) == 0.0);

  CHECK_THROWS_AS(bias_kernel(t.gammas, KernelSpec::flat_top(0.5), 1), UnsupportedError);
  CHECK_THROWS_AS(bias_kernel(t.gammas, bartlett, 0), ContractError);
}

TEST_CASE("bias kernel from estimated autocovariances is symmetric") {
  std::mt19937_64 rng(27);
  for (int trial = 0; trial < 20; ++trial) {
    const CurveSample x(oracle::random_matrix(40, 1 + trial % 7, rng));
    const AutocovSet set(x, 4);
    const Surface f = bias_kernel(set, KernelSpec::parzen(), 4).surface;
    CHECK(max_abs_diff(f, f.transpose()) <= 1e-10 * std::max(1.0, f.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("limit covariance L") {
  const KernelSpec k = KernelSpec::bartlett();
  const Quartic zero = asymptotic_covariance_L(Surface::Zero(3, 3), k);
  CHECK(zero(1, 2, 0, 1) == 0.0);

  const Quartic scalar_l = asymptotic_covariance_L(Surface::Constant(1, 1, 1.5), k);
  CHECK(scalar_l(0, 0, 0, 0) == doctest::Approx(2.0 * 1.5 * 1.5 * 2.0 / 3.0));

  std::mt19937_64 rng(28);
  const Surface c = oracle::random_symmetric(5, rng);
  const Quartic l = asymptotic_covariance_L(c, k);
  for (int t = 0; t < 5; ++t)
    for (int s = 0; s < 5; ++s)
      CHECK(l(t, s, t, s) == doctest::Approx((c(t, s) * c(t, s) + c(t, t) * c(s, s)) * (2.0 / 3.0)));
  CHECK_THROWS_AS(asymptotic_covariance_L(Surface::Zero(65, 65), k), ContractError);
}

TEST_CASE("gamma1_norm_sq") {
  const KernelSpec k = KernelSpec::bartlett();
  CHECK(gamma1_norm_sq(Surface::Zero(4, 4), k) == 0.0);
  CHECK(gamma1_norm_sq(Surface::Ones(4, 4), k) == doctest::Approx(4.0 / 3.0));
  const auto b = fourier_basis(Grid(16), 2);
  CHECK(std::abs(gamma1_norm_sq(b[1] * b[1].transpose(), k)) < 1e-24);
}

TEST_CASE("amse monotonicity in the degenerate cases") {
  const KernelSpec k = KernelSpec::bartlett();
  const Surface c = Surface::Constant(1, 1, 2.0);
  const Surface f = Surface::Constant(1, 1, -1.0);
  const Surface zero = Surface::Zero(1, 1);
  double prev_var = -1.0;
  double prev_bias = std::numeric_limits<double>::infinity();
  for (double h = 0.5; h < 50.0; h += 0.5) {
    const double v = amse(c, zero, k, h, 500);
    const double b = amse(zero, f, k, h, 500);
    CHECK(v > prev_var);
    CHECK(b < prev_bias);
    prev_var = v;
    prev_bias = b;
  }
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0.1, 40.0);
  for (int i = 0; i < 200; ++i) {
    const double h1 = u(rng);
    const double h2 = u(rng);
    const double diff = amse(c, zero, k, h1, 300) - amse(c, zero, k, h2, 300);
    CHECK((diff > 0) == (h1 > h2));
  }
}

TEST_CASE("optimal bandwidth for scalar MA(1)") {
  const KernelSpec k = KernelSpec::bartlett();
  const TruthSet t = truth(ma1(0.5, 0), Grid(1), k);
  const BandwidthSelection sel = optimal_bandwidth(t.c, t.bias->surface, k, 1000);
  CHECK(sel.h == doctest::Approx(6.666666666666667).epsilon(1e-12));
  CHECK(sel.c0 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK_FALSE(sel.fallback_used);

  // Fine-grid minimization of the AMSE written out directly.
  const double c = 2.25;
  const double f2 = 1.0;
  double best_h = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 40000; ++i) {
    const double h = i * 0.001;
    const double v = h / 1000.0 * 2.0 * c * c * (2.0 / 3.0) + f2 / (h * h);
    if (v < best) {
      best = v;
      best_h = h;
    }
  }
  CHECK(std::abs(sel.h - best_h) <= 0.05 * best_h);

  const BandwidthSelection twice = optimal_bandwidth(t.c, t.bias->surface, k, 2000);
  CHECK(twice.h / sel.h == doctest::Approx(std::cbrt(2.0)).epsilon(1e-12));
}

TEST_CASE("optimal bandwidth degenerate inputs") {
  const KernelSpec k = KernelSpec::parzen();
  const BandwidthSelection fb = optimal_bandwidth(Surface::Ones(3, 3), Surface::Zero(3, 3), k, 3125);
  CHECK(fb.fallback_used);
  CHECK(fb.h == doctest::Approx(5.0));
  const auto b = fourier_basis(Grid(8), 2);
  CHECK_THROWS_AS(optimal_bandwidth(b[1] * b[1].transpose(), Surface::Ones(8, 8), k, 100), InputError);
  CHECK_THROWS_AS(optimal_bandwidth(Surface::Ones(3, 3), Surface::Ones(3, 3), KernelSpec::flat_top(0.5), 100),
                  UnsupportedError);
}

TEST_CASE("plug-in bandwidth on iid data") {
  const KernelSpec k = KernelSpec::bartlett();
  int fallback = 0;
  int inside = 0;
  const int reps = 60;
  for (int r = 0; r < reps; ++r) {
    DgpSpec spec;
    spec.seed = 900;
    const CurveSample x = generate(spec, 2000, Grid(1), static_cast<std::uint64_t>(r));
    const BandwidthSelection sel = plugin_bandwidth(x, k);
    CHECK(sel.h >= 1.0);
    CHECK(sel.h <= 1000.0);
    if (sel.fallback_used) ++fallback;
    if (sel.h <= 2.0 * std::cbrt(2000.0)) ++inside;
  }
  CHECK((2 * fallback >= reps || inside == reps));
}

TEST_CASE("plug-in bandwidth tracks h_opt for MA(1)") {
  const KernelSpec k = KernelSpec::bartlett();
  const TruthSet t = truth(ma1(0.5, 0), Grid(1), k);
  const double h_opt = optimal_bandwidth(t.c, t.bias->surface, k, 2000).h;
  std::vector<double> hs;
  for (int r = 0; r < 200; ++r) {
    const CurveSample x = generate(ma1(0.5, 2024), 2000, Grid(1), static_cast<std::uint64_t>(r));
    hs.push_back(plugin_bandwidth(x, k).h);
  }
  std::nth_element(hs.begin(), hs.begin() + 100, hs.end());
  const double upper = hs[100];
  std::nth_element(hs.begin(), hs.begin() + 99, hs.end());
  const double median = 0.5 * (hs[99] + upper);
  CHECK(std::abs(median - h_opt) <= 0.35 * h_opt);
}

TEST_CASE("plug-in bandwidth options and degenerate data") {
  const CurveSample x = generate(ma1(0.5, 3), 400, Grid(4));
  const BandwidthSelection sel = plugin_bandwidth(x, KernelSpec::parzen(), Bandwidth(5.0), 3);
  CHECK(sel.pilot_h == 5.0);
  CHECK(sel.m_trunc == 3);
  const BandwidthSelection dflt = plugin_bandwidth(x, KernelSpec::parzen());
  CHECK(dflt.pilot_h == doctest::Approx(std::pow(400.0, 0.2)));
  CHECK(dflt.m_trunc == 3);
  CHECK(default_pilot_bandwidth(32) == doctest::Approx(2.0));

  const CurveSample flat(Eigen::MatrixXd::Constant(50, 3, 2.5));
  CHECK_THROWS_AS(plugin_bandwidth(flat, KernelSpec::bartlett()), InputError);
  CHECK_THROWS_AS(plugin_bandwidth(x, KernelSpec::flat_top(0.5)), UnsupportedError);
}

TEST_CASE("consistency on functional MA(1)") {
  DgpSpec spec = ma1(0.5, 31);
  spec.noise.sigmas = {1.0, 0.7, 0.4};
  const Grid grid(8);
  const TruthSet t = truth(spec, grid, KernelSpec::bartlett());
  const double c_norm = l2_norm_surface(t.c);
  int good = 0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    const CurveSample x = generate(spec, 4000, grid, static_cast<std::uint64_t>(r));
    const Surface est = estimate_lrcov(x, KernelSpec::bartlett(), Bandwidth(std::cbrt(4000.0))).surface;
    if (l2_norm_surface(est - t.c) / c_norm <= 0.2) ++good;
  }
  CHECK(good >= 180);
}

TEST_CASE("PSD projection") {
  std::mt19937_64 rng(30);
  const Surface a = oracle::random_matrix(6, 6, rng);
  const Surface psd = a * a.transpose();
  CHECK(max_abs_diff(project_psd(psd), psd) <= 1e-10 * psd.cwiseAbs().maxCoeff());

  const auto b = fourier_basis(Grid(16), 3);
  CHECK(project_psd(Surface(-b[2] * b[2].transpose())).cwiseAbs().maxCoeff() <= 1e-12);

  for (int trial = 0; trial < 50; ++trial) {
    const int g = 1 + trial % 12;
    const Surface s = oracle::random_symmetric(g, rng);
    const Surface p = project_psd(s);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> in(s / g);
    double clipped = 0.0;
    for (double ev : in.eigenvalues()) if (ev < 0) clipped += ev * ev;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> out(p / g);
    CHECK(out.eigenvalues().minCoeff() >= -1e-12);
    // Operator Frobenius norm of S - P is ||S - P||_{L2} on the grid.
    CHECK(std::abs(l2_norm_surface(s - p) - std::sqrt(clipped)) <= 1e-8);
    CHECK(max_abs_diff(p, p.transpose()) == 0.0);
  }

  Surface asym = Surface::Identity(3, 3);
  asym(0, 2) = 0.5;
  CHECK_THROWS_AS(project_psd(asym), ContractError);

  const CurveSample x = generate(ma1(-0.9, 8), 60, Grid(5));
  const LrcovEstimate est = project_psd(estimate_lrcov(x, KernelSpec::tukey_hanning(), Bandwidth(8.0)));
  CHECK(est.psd_projected);
}
