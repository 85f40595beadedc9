#include "lrcov/kernels.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

#include "lrcov/errors.hpp"

namespace lrcov {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

KernelSpec KernelSpec::bartlett() { return {KernelType::Bartlett, 0.0, 1.0, -1.0, 2.0 / 3.0, 1.0}; }

KernelSpec KernelSpec::parzen() {
  // K' peaks in magnitude at |u| = 1/3 where it equals -2.
  return {KernelType::Parzen, 0.0, 2.0, -6.0, 151.0 / 280.0, 2.0};
}

KernelSpec KernelSpec::tukey_hanning() {
  const double pi = std::numbers::pi;
  return {KernelType::TukeyHanning, 0.0, 2.0, -pi * pi / 4.0, 0.75, pi / 2.0};
}

KernelSpec KernelSpec::flat_top(double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw ConfigError("flat-top kernel needs 0 <= rho < 1, got " + std::to_string(rho));
  }
  const double ksq = 2.0 * (rho + (1.0 - rho) / 3.0);
  return {KernelType::FlatTop, rho, kInf, 0.0, ksq, 1.0 / (1.0 - rho)};
}

KernelSpec KernelSpec::from_name(std::string_view name, double rho) {
  const std::string n = lowercase(name);
  if (n == "bartlett") return bartlett();
  if (n == "parzen") return parzen();
  if (n == "tukey-hanning" || n == "tukey_hanning" || n == "tukeyhanning") return tukey_hanning();
  if (n == "flat-top" || n == "flat_top" || n == "flattop") return flat_top(rho);
  throw ConfigError("unknown kernel '" + std::string(name) + "'");
}

std::string KernelSpec::name() const {
  switch (type_) {
    case KernelType::Bartlett: return "bartlett";
    case KernelType::Parzen: return "parzen";
    case KernelType::TukeyHanning: return "tukey-hanning";
    case KernelType::FlatTop: return "flat-top";
  }
  return "unknown";
}

double KernelSpec::operator()(double u) const noexcept {
  const double a = std::abs(u);
  if (a > support_) return 0.0;
  switch (type_) {
    case KernelType::Bartlett:
      return 1.0 - a;
    case KernelType::Parzen:
      if (a <= 0.5) return 1.0 - 6.0 * a * a + 6.0 * a * a * a;
      return 2.0 * (1.0 - a) * (1.0 - a) * (1.0 - a);
    case KernelType::TukeyHanning:
      return 0.5 * (1.0 + std::cos(std::numbers::pi * a));
    case KernelType::FlatTop:
      if (a <= rho_) return 1.0;
      return (1.0 - a) / (1.0 - rho_);
  }
  return 0.0;
}

double kernel_value(const KernelSpec& spec, double u) noexcept { return spec(u); }

double char_exponent_check(const KernelSpec& spec) {
  if (!spec.has_finite_q()) {
    throw UnsupportedError("char_exponent_check: " + spec.name() +
                           " kernel has infinite characteristic exponent");
  }
  const double q = spec.q_char();
  auto ratio = [&](double x) { return (spec(x) - 1.0) / std::pow(x, q); };
  const double f2 = ratio(1e-2);
  const double f3 = ratio(1e-3);
  const double f4 = ratio(1e-4);
  // Two Richardson levels for step ratio 10: first removes an O(x) error, then O(x^2).
  const double r23 = (10.0 * f3 - f2) / 9.0;
  const double r34 = (10.0 * f4 - f3) / 9.0;
  const double estimate = (100.0 * r34 - r23) / 99.0;
  const double kappa = spec.kappa();
  if (std::abs(estimate - kappa) > 0.01 * std::abs(kappa)) {
    throw KernelSpecError("kernel " + spec.name() + ": extrapolated limit " +
                          std::to_string(estimate) + " disagrees with stored kappa " +
                          std::to_string(kappa));
  }
  return estimate;
}

Bandwidth::Bandwidth(double h) : h_(h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw ContractError("bandwidth must be a positive finite number, got " + std::to_string(h));
  }
}

}  // namespace lrcov
