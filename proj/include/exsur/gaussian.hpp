#ifndef EXSUR_GAUSSIAN_HPP
#define EXSUR_GAUSSIAN_HPP

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

namespace exsur {

/// Ψ(t) = P{N(0,1) ≥ t}. Handles ±∞.
inline double gaussian_tail(double t) {
    return 0.5 * std::erfc(t / std::numbers::sqrt2);
}

/// Φ(t) = P{N(0,1) ≤ t}.
inline double gaussian_cdf(double t) { return gaussian_tail(-t); }

inline double gaussian_pdf(double t) {
    return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
}

/// Φ⁻¹(p) for p in (0, 1).
inline double gaussian_quantile(double p) {
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

}  // namespace exsur

#endif  // EXSUR_GAUSSIAN_HPP
