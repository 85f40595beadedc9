#pragma once

namespace lrcov {

/// Standard normal CDF, 0.5 * erfc(-x / sqrt 2).
double normal_cdf(double x);

/// Standard normal quantile for p in (0, 1).
///
/// Acklam's rational approximation (relative error 1.15e-9) followed by one
/// Halley step against normal_cdf, which brings the absolute error well
/// below 1e-12 across (1e-300, 1 - 1e-16).
double normal_quantile(double p);

}  // namespace lrcov
