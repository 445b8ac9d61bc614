#pragma once

#include <cmath>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "gsaudit/error.hpp"

namespace gsaudit {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Two-sided p-value of a standard-normal statistic.
inline double two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

/// Upper tail P(X > x) of a chi-square variable with `df` degrees of freedom.
inline double chi_square_sf(double x, double df) {
  if (!(df > 0.0) || !std::isfinite(df)) {
    throw DomainError("chi-square degrees of freedom must be positive, got " + std::to_string(df));
  }
  if (std::isnan(x)) throw DomainError("chi-square statistic is NaN");
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(df / 2.0, x / 2.0);
}

}  // namespace gsaudit
