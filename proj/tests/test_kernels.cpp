#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "lrcov/errors.hpp"
#include "lrcov/kernels.hpp"
#include "oracles.hpp"

using namespace lrcov;

namespace {

std::vector<KernelSpec> all_kernels() {
  return {KernelSpec::bartlett(), KernelSpec::parzen(), KernelSpec::tukey_hanning(),
          KernelSpec::flat_top(0.5), KernelSpec::flat_top(0.0), KernelSpec::flat_top(0.9)};
}

}  // namespace

TEST_CASE("Bartlett values") {
  const KernelSpec k = KernelSpec::bartlett();
  CHECK(k(0.0) == 1.0);
  CHECK(k(0.5) == 0.5);
  CHECK(k(-0.25) == 0.75);
  CHECK(k(1.0) == 0.0);
  CHECK(k(1.5) == 0.0);
  CHECK(k.ksq_integral() == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(k.q_char() == 1.0);
  CHECK(k.kappa() == -1.0);
  CHECK(kernel_value(k, 0.3) == k(0.3));
}

TEST_CASE("Parzen and Tukey-Hanning closed forms") {
  const KernelSpec p = KernelSpec::parzen();
  CHECK(p(0.25) == doctest::Approx(1.0 - 6.0 * 0.0625 + 6.0 * 0.015625));
  CHECK(p(0.75) == doctest::Approx(2.0 * 0.015625));
  CHECK(p(0.5) == doctest::Approx(0.25));
  CHECK(p.ksq_integral() == doctest::Approx(151.0 / 280.0).epsilon(1e-15));
  CHECK(p.ksq_integral() == doctest::Approx(0.539285714).epsilon(1e-9));
  CHECK(p.kappa() == -6.0);
  CHECK(p.q_char() == 2.0);

  const KernelSpec t = KernelSpec::tukey_hanning();
  CHECK(t(0.5) == doctest::Approx(0.5));
  CHECK(t(1.0) == doctest::Approx(0.0));
  CHECK(t.ksq_integral() == doctest::Approx(0.75));
  CHECK(t.kappa() == doctest::Approx(-std::numbers::pi * std::numbers::pi / 4.0));
}

TEST_CASE("flat-top kernel") {
  const KernelSpec f = KernelSpec::flat_top(0.5);
  CHECK(f(0.4) == 1.0);
  CHECK(f(0.75) == doctest::Approx(0.5));
  CHECK(f(1.0) == 0.0);
  CHECK_FALSE(f.has_finite_q());
  CHECK(f.lipschitz() == doctest::Approx(2.0));
  CHECK(f.ksq_integral() == doctest::Approx(4.0 / 3.0));
  CHECK_THROWS_AS(KernelSpec::flat_top(1.0), ConfigError);
  CHECK_THROWS_AS(KernelSpec::flat_top(-0.1), ConfigError);
  CHECK_THROWS_AS(char_exponent_check(f), UnsupportedError);
}

TEST_CASE("kernel lookup by name") {
  CHECK(KernelSpec::from_name("Bartlett").type() == KernelType::Bartlett);
  CHECK(KernelSpec::from_name("parzen").type() == KernelType::Parzen);
  CHECK(KernelSpec::from_name("tukey-hanning").type() == KernelType::TukeyHanning);
  CHECK(KernelSpec::from_name("flat-top", 0.3).rho() == doctest::Approx(0.3));
  CHECK_THROWS_AS(KernelSpec::from_name("quadratic-spectral"), ConfigError);
}

TEST_CASE("characteristic exponent constants by extrapolation") {
  CHECK(char_exponent_check(KernelSpec::bartlett()) == doctest::Approx(-1.0).epsilon(0.01));
  CHECK(char_exponent_check(KernelSpec::parzen()) == doctest::Approx(-6.0).epsilon(0.01));
  CHECK(char_exponent_check(KernelSpec::tukey_hanning()) == doctest::Approx(-2.4674).epsilon(0.01));
}

TEST_CASE("stored int K^2 matches quadrature") {
  for (const KernelSpec& k : all_kernels()) {
    CAPTURE(k.name());
    const double quad = oracle::ksq_by_quadrature([&](double u) { return k(u); });
    CHECK(std::abs(quad - k.ksq_integral()) <= 1e-8);
  }
}

TEST_CASE("symmetry, support and Lipschitz bound on random points") {
  std::mt19937_64 rng(5);
  for (const KernelSpec& k : all_kernels()) {
    CAPTURE(k.name());
    const double c = k.support();
    std::uniform_real_distribution<double> u(-2.0 * c, 2.0 * c);
    CHECK(k(0.0) == 1.0);
    for (int i = 0; i < 1000; ++i) {
      const double x = u(rng);
      const double y = u(rng);
      CHECK(k(x) == k(-x));
      if (std::abs(x) > c) CHECK(k(x) == 0.0);
      CHECK(std::abs(k(x) - k(y)) <= k.lipschitz() * std::abs(x - y) * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("bandwidth") {
  CHECK(Bandwidth(3.5).value() == 3.5);
  CHECK(Bandwidth(0.5).degenerate());
  CHECK_FALSE(Bandwidth(1.0).degenerate());
  CHECK_THROWS_AS(Bandwidth(0.0), ContractError);
  CHECK_THROWS_AS(Bandwidth(-1.0), ContractError);
  CHECK_THROWS_AS(Bandwidth(std::nan("")), ContractError);
}
