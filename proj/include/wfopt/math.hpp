#pragma once

#include <cmath>
#include <numbers>

namespace wfopt {

inline constexpr double kSqrt2 = std::numbers::sqrt2;
inline constexpr double kLnSqrt2Pi = 0.9189385332046727417803297;  // ln sqrt(2*pi)

inline double norm_pdf(double x) {
  return std::exp(-0.5 * x * x - kLnSqrt2Pi);
}

inline double norm_cdf(double x) {
  return 0.5 * std::erfc(-x / kSqrt2);
}

// log Phi(x), stable over the whole double range. erfc stays normal down to
// x ~ -37; below that use the Mills-ratio expansion
//   Phi(x) = phi(x)/(-x) * (1 - 1/x^2 + 3/x^4 - 15/x^6 + 105/x^8 - ...)
inline double log_norm_cdf(double x) {
  if (x >= -1.0) {
    // log1p on the upper-tail complement avoids cancellation for x >> 0
    return std::log1p(-0.5 * std::erfc(x / kSqrt2));
  }
  if (x >= -36.0) {
    return std::log(0.5 * std::erfc(-x / kSqrt2));
  }
  const double x2 = x * x;
  const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2) +
                        105.0 / (x2 * x2 * x2 * x2);
  return -0.5 * x2 - kLnSqrt2Pi - std::log(-x) + std::log(series);
}

// hazard ratio phi(x)/Phi(x), stable for arbitrarily negative x
inline double norm_hazard(double x) {
  return std::exp(-0.5 * x * x - kLnSqrt2Pi - log_norm_cdf(x));
}

}  // namespace wfopt
