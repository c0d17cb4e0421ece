#pragma once

#include <cmath>
#include <numbers>

namespace stepiem {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Reduce x into [base, base + period). Every mod-2π style reduction in the
/// library goes through here so that values landing on the upper end are
/// always sent to `base`.
inline double wrap_into(double x, double base, double period) {
    double r = std::fmod(x - base, period);
    if (r < 0.0) r += period;
    if (r >= period) r = 0.0;
    return base + r;
}

/// Canonical angle in [-pi, pi); +pi maps to -pi.
inline double wrap_angle(double a) { return wrap_into(a, -pi, two_pi); }

/// Angle in [0, 2pi).
inline double wrap_positive(double a) { return wrap_into(a, 0.0, two_pi); }

/// Shortest distance between two points of a circle of the given circumference.
inline double circle_distance(double a, double b, double period = two_pi) {
    double d = std::fmod(std::fabs(a - b), period);
    return std::fmin(d, period - d);
}

/// Offset of x measured forward from `from`, in [0, period).
inline double forward_offset(double from, double x, double period) {
    return wrap_into(x - from, 0.0, period);
}

}  // namespace stepiem
