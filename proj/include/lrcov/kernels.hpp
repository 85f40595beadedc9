#pragma once

// Lag-window kernels with compact support [-c, c], K(0) = 1, symmetric and
// Lipschitz on the support. Each kernel also carries its characteristic
// exponent q and the signed limit kappa = lim_{x->0} (K(x) - 1) / |x|^q,
// which together drive the h^{-q} bias term.

#include <limits>
#include <string>
#include <string_view>

namespace lrcov {

enum class KernelType { Bartlett, Parzen, TukeyHanning, FlatTop };

class KernelSpec {
 public:
  static KernelSpec bartlett();
  static KernelSpec parzen();
  static KernelSpec tukey_hanning();
  /// 1 on |u| <= rho, linear down to 0 at |u| = 1. Requires 0 <= rho < 1.
  static KernelSpec flat_top(double rho);
  /// Case-insensitive: "bartlett", "parzen", "tukey-hanning" / "tukey_hanning", "flat-top" / "flattop".
  static KernelSpec from_name(std::string_view name, double rho = 0.5);

  KernelType type() const noexcept { return type_; }
  std::string name() const;
  double rho() const noexcept { return rho_; }
  double support() const noexcept { return support_; }
  /// Characteristic exponent; +inf for the flat-top kernel.
  double q_char() const noexcept { return q_char_; }
  bool has_finite_q() const noexcept { return q_char_ < std::numeric_limits<double>::infinity(); }
  /// Signed limit (K(x) - 1) / |x|^q at 0. Meaningless (0) for flat-top.
  double kappa() const noexcept { return kappa_; }
  /// int_{-c}^{c} K^2(z) dz.
  double ksq_integral() const noexcept { return ksq_integral_; }
  double lipschitz() const noexcept { return lipschitz_; }

  double operator()(double u) const noexcept;

 private:
  KernelSpec(KernelType type, double rho, double q, double kappa, double ksq, double lipschitz)
      : type_(type), rho_(rho), q_char_(q), kappa_(kappa), ksq_integral_(ksq), lipschitz_(lipschitz) {}

  KernelType type_;
  double rho_ = 0.0;
  double support_ = 1.0;
  double q_char_;
  double kappa_;
  double ksq_integral_;
  double lipschitz_;
};

double kernel_value(const KernelSpec& spec, double u) noexcept;

/// Estimates lim (K(x) - 1)/|x|^q from x in {1e-2, 1e-3, 1e-4} by Richardson
/// extrapolation and checks it against the stored kappa (1% relative).
/// Throws UnsupportedError for q = inf and KernelSpecError on disagreement.
double char_exponent_check(const KernelSpec& spec);

/// Bandwidth h > 0. Values below 1 are allowed but make every nonzero lag
/// vanish for the c = 1 kernels; `degenerate()` reports that case.
class Bandwidth {
 public:
  explicit Bandwidth(double h);
  double value() const noexcept { return h_; }
  bool degenerate() const noexcept { return h_ < 1.0; }

 private:
  double h_;
};

}  // namespace lrcov
