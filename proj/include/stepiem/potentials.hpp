#pragma once

#include "angles.hpp"
#include "numerics.hpp"

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>

namespace stepiem {

struct PhasePoint {
    double q = 0.0;
    double p = 0.0;
};

/// One-degree-of-freedom potential with a single minimum V(0) = 0.
///
/// Besides V and V' an analytic potential may supply a "gap" function
/// gap(t, d) = V(t) - V(t - sign(t) d), the energy left for kinetic motion at
/// distance d inside the turning point t. Supplying it in factored form keeps
/// the quadratures accurate next to turning points.
class Potential1D {
public:
    enum class Kind { linear_oscillator, analytic };
    using Fn = std::function<double(double)>;
    using GapFn = std::function<double(double, double)>;

    static Potential1D linear_oscillator(double omega) {
        if (!(omega > 0.0) || !std::isfinite(omega))
            throw DomainError("oscillator frequency must be positive");
        Potential1D v;
        v.kind_ = Kind::linear_oscillator;
        v.omega_ = omega;
        v.label_ = "lo";
        return v;
    }

    /// V(q) = a q^4 / 4.
    static Potential1D quartic(double a) {
        if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("quartic coefficient must be positive");
        auto v = analytic(
            "quartic", [a](double q) { return 0.25 * a * (q * q) * (q * q); },
            [a](double q) { return a * q * q * q; },
            [a](double t, double d) {
                double b = t - std::copysign(d, t);
                return 0.25 * a * d * (2.0 * std::fabs(t) - d) * (t * t + b * b);
            });
        v.params_ = {a};
        return v;
    }

    /// V(q) = a (e^q - 1 - q), an asymmetric family used to exercise the
    /// general code paths.
    static Potential1D exponential(double a) {
        if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("exponential coefficient must be positive");
        auto v = analytic(
            "exponential", [a](double q) { return a * (std::expm1(q) - q); },
            [a](double q) { return a * std::expm1(q); },
            [a](double t, double d) {
                double s = std::copysign(d, t);
                return a * (-std::exp(t) * std::expm1(-s) - s);
            });
        v.params_ = {a};
        return v;
    }

    static Potential1D analytic(std::string label, Fn value, Fn derivative, GapFn gap = {}) {
        Potential1D v;
        v.kind_ = Kind::analytic;
        v.label_ = std::move(label);
        v.value_ = std::move(value);
        v.derivative_ = std::move(derivative);
        v.gap_ = std::move(gap);
        return v;
    }

    Kind kind() const { return kind_; }
    const std::string& label() const { return label_; }
    const std::vector<double>& params() const { return params_; }

    /// Frequency of the linear oscillator kind.
    double omega() const {
        if (kind_ != Kind::linear_oscillator) throw DomainError("omega() is defined for the linear oscillator only");
        return omega_;
    }

    /// True when closed forms are used instead of quadratures.
    bool closed_form() const { return kind_ == Kind::linear_oscillator && closed_form_; }

    /// Same potential, forced onto the quadrature path.
    Potential1D quadrature_only() const {
        Potential1D v = *this;
        v.closed_form_ = false;
        return v;
    }

    double value(double q) const {
        if (kind_ == Kind::linear_oscillator) {
            double c = omega_ * q;
            return 0.5 * c * c;
        }
        return value_(q);
    }

    double derivative(double q) const {
        if (kind_ == Kind::linear_oscillator) return omega_ * omega_ * q;
        return derivative_(q);
    }

    double gap(double t, double d) const {
        if (kind_ == Kind::linear_oscillator) {
            double w2 = omega_ * omega_;
            return 0.5 * w2 * d * (2.0 * std::fabs(t) - d);
        }
        if (gap_) return gap_(t, d);
        return value_(t) - value_(t - std::copysign(d, t));
    }

    /// Sampled check of V(0) = 0, q V'(q) > 0 and monotone growth on each side.
    void check_shape(double q_lo, double q_hi, int n = 200) const {
        if (std::fabs(value(0.0)) > 1e-14) throw DomainError(label_ + ": V(0) must vanish");
        for (double end : {q_lo, q_hi}) {
            double prev = 0.0;
            for (int k = 1; k <= n; ++k) {
                double q = end * double(k) / double(n);
                if (!(q * derivative(q) > 0.0)) throw DomainError(label_ + ": q V'(q) must be positive away from 0");
                double vq = value(q);
                if (!(vq > prev)) throw DomainError(label_ + ": V must increase away from 0");
                prev = vq;
            }
        }
    }

private:
    Kind kind_ = Kind::linear_oscillator;
    bool closed_form_ = true;
    double omega_ = 1.0;
    std::string label_;
    std::vector<double> params_;
    Fn value_, derivative_;
    GapFn gap_;
};

struct OscillatorData {
    double e = 0.0;
    double q_min = 0.0;
    double q_max = 0.0;
    double T = 0.0;
    double I = 0.0;
    double omega = 0.0;
    double t_plus = 0.0;   ///< travel time q_max -> 0
    double t_minus = 0.0;  ///< travel time 0 -> q_min
};

struct WallPhaseData {
    double e = 0.0;
    double q_wall = 0.0;
    double T_tilde = 0.0;
    double theta_wall = 0.0;
};

namespace detail {

inline void require_positive_energy(double e) {
    if (!(e > 0.0) || !std::isfinite(e)) throw DomainError("energy must be positive");
}

/// dt/du along one side of the orbit, with q = t - sign(t) u^2.
inline double side_density(const Potential1D& v, double t, double u) {
    double g = v.gap(t, u * u);
    if (!(g > 0.0)) return 2.0 / std::sqrt(2.0 * std::fabs(v.derivative(t)));
    return 2.0 * u / std::sqrt(2.0 * g);
}

/// Travel time between the points u = a and u = b inside turning point t.
inline double side_time(const Potential1D& v, double t, double a, double b) {
    return integrate([&](double u) { return side_density(v, t, u); }, a, b);
}

inline double side_area(const Potential1D& v, double t) {
    double s = std::sqrt(std::fabs(t));
    return integrate(
        [&](double u) {
            double g = v.gap(t, u * u);
            return g > 0.0 ? 2.0 * u * std::sqrt(2.0 * g) : 0.0;
        },
        0.0, s);
}

inline double turning_point(const Potential1D& v, double e, double dir) {
    double b = dir;
    int guard = 0;
    while (v.value(b) < e) {
        b *= 2.0;
        if (++guard > 1000 || !std::isfinite(b)) throw NumericalError("no turning point: V stays below e");
    }
    double a = 0.0;
    if (dir < 0.0) std::swap(a, b);
    return solve_bracketed([&](double q) { return v.value(q) - e; }, a, b);
}

/// Solve side_time(0, s) = tau for s in [0, s_max].
inline double invert_side_time(const Potential1D& v, double t, double tau, double s_max, double t_side) {
    if (tau <= 0.0) return 0.0;
    if (tau >= t_side) return s_max;
    auto f = [&](double s) { return std::make_pair(side_time(v, t, 0.0, s) - tau, side_density(v, t, s)); };
    double guess = s_max * tau / t_side;
    std::uintmax_t iters = 100;
    double s = boost::math::tools::newton_raphson_iterate(f, guess, 0.0, s_max, 50, iters);
    return s;
}

}  // namespace detail

inline std::pair<double, double> turning_points(const Potential1D& v, double e) {
    detail::require_positive_energy(e);
    if (v.closed_form()) {
        double a = std::sqrt(2.0 * e) / v.omega();
        return {-a, a};
    }
    return {detail::turning_point(v, e, -1.0), detail::turning_point(v, e, 1.0)};
}

inline OscillatorData oscillator_data(const Potential1D& v, double e) {
    detail::require_positive_energy(e);
    OscillatorData d;
    d.e = e;
    std::tie(d.q_min, d.q_max) = turning_points(v, e);
    if (v.closed_form()) {
        d.omega = v.omega();
        d.T = two_pi / d.omega;
        d.I = e / d.omega;
        d.t_plus = d.t_minus = 0.25 * d.T;
        return d;
    }
    d.t_plus = detail::side_time(v, d.q_max, 0.0, std::sqrt(d.q_max));
    d.t_minus = detail::side_time(v, d.q_min, 0.0, std::sqrt(-d.q_min));
    d.T = 2.0 * (d.t_plus + d.t_minus);
    d.omega = two_pi / d.T;
    d.I = (detail::side_area(v, d.q_max) + detail::side_area(v, d.q_min)) / pi;
    return d;
}

inline double period(const Potential1D& v, double e) { return oscillator_data(v, e).T; }

inline std::pair<double, double> action_and_frequency(const Potential1D& v, double e) {
    if (e == 0.0 && v.closed_form()) return {0.0, v.omega()};
    auto d = oscillator_data(v, e);
    return {d.I, d.omega};
}

namespace detail {

inline void require_wall_inside(const Potential1D& v, double e, double q_wall) {
    if (!(e > v.value(q_wall)))
        throw DomainError("wall lies outside the oscillation range (e <= V(q_wall))");
}

/// Closed-form wall angle of the linear oscillator, arccos(omega q / sqrt(2e))
/// written with atan2 so that e -> V(q_wall) stays accurate.
inline double lo_wall_angle(double omega, double q_wall, double e) {
    double c = omega * q_wall;
    double r = 2.0 * e - c * c;
    return std::atan2(std::sqrt(std::fmax(r, 0.0)), c);
}

}  // namespace detail

inline double partial_period(const Potential1D& v, const OscillatorData& d, double q_wall) {
    detail::require_wall_inside(v, d.e, q_wall);
    if (v.closed_form()) return 2.0 * detail::lo_wall_angle(v.omega(), q_wall, d.e) / v.omega();
    if (q_wall > 0.0) return 2.0 * detail::side_time(v, d.q_max, 0.0, std::sqrt(d.q_max - q_wall));
    double s_w = std::sqrt(q_wall - d.q_min);
    return 2.0 * (d.t_plus + detail::side_time(v, d.q_min, s_w, std::sqrt(-d.q_min)));
}

inline double partial_period(const Potential1D& v, double e, double q_wall) {
    detail::require_wall_inside(v, e, q_wall);
    return partial_period(v, oscillator_data(v, e), q_wall);
}

/// Wall angle in (0, pi). The quadrature route measures the travel time from
/// the lower turning point up to the wall, which is the complement of the
/// range used by partial_period.
inline double wall_phase(const Potential1D& v, const OscillatorData& d, double q_wall) {
    double vw = v.value(q_wall);
    if (d.e == vw) return q_wall > 0.0 ? 0.0 : pi;
    detail::require_wall_inside(v, d.e, q_wall);
    if (v.closed_form()) return detail::lo_wall_angle(v.omega(), q_wall, d.e);
    double tau;
    if (q_wall < 0.0) {
        tau = detail::side_time(v, d.q_min, 0.0, std::sqrt(q_wall - d.q_min));
    } else {
        double s_w = std::sqrt(d.q_max - q_wall);
        tau = d.t_minus + detail::side_time(v, d.q_max, s_w, std::sqrt(d.q_max));
    }
    return pi - d.omega * tau;
}

/// Wall angle, extended to e = V(q_wall) by its one-sided limit.
inline double wall_phase(const Potential1D& v, double e, double q_wall) {
    if (e == v.value(q_wall)) return q_wall > 0.0 ? 0.0 : pi;
    detail::require_wall_inside(v, e, q_wall);
    return wall_phase(v, oscillator_data(v, e), q_wall);
}

inline WallPhaseData wall_phase_data(const Potential1D& v, double e, double q_wall) {
    auto d = oscillator_data(v, e);
    return {e, q_wall, partial_period(v, d, q_wall), wall_phase(v, d, q_wall)};
}

inline double angle_of_state(const Potential1D& v, const OscillatorData& d, double q, double p) {
    double en = 0.5 * p * p + v.value(q);
    if (std::fabs(en - d.e) > 1e-8 * std::fmax(1.0, d.e)) throw DomainError("state is off the energy shell");
    if (v.closed_form()) return wrap_angle(std::atan2(-p / v.omega(), q));
    if (p == 0.0) return q > 0.0 ? 0.0 : -pi;
    double t = q >= 0.0 ? d.q_max : d.q_min;
    double depth = std::fabs(t - q);
    if (depth < 1e-2 * std::fabs(t)) {
        double k = 0.5 * p * p;
        depth = solve_bracketed([&](double x) { return v.gap(t, x) - k; }, 0.0, std::fabs(t));
    }
    double tau = detail::side_time(v, t, 0.0, std::sqrt(depth));
    double phi = q >= 0.0 ? d.omega * tau : pi - d.omega * tau;
    return wrap_angle(p < 0.0 ? phi : -phi);
}

inline double angle_of_state(const Potential1D& v, double e, double q, double p) {
    return angle_of_state(v, oscillator_data(v, e), q, p);
}

inline PhasePoint state_of_angle(const Potential1D& v, const OscillatorData& d, double theta) {
    theta = wrap_angle(theta);
    if (v.closed_form()) {
        double a = std::sqrt(2.0 * d.e);
        return {a / v.omega() * std::cos(theta), -a * std::sin(theta)};
    }
    double phi = std::fabs(theta);
    double tau = phi / d.omega;
    double t, s;
    if (tau <= d.t_plus) {
        t = d.q_max;
        s = detail::invert_side_time(v, t, tau, std::sqrt(d.q_max), d.t_plus);
    } else {
        t = d.q_min;
        s = detail::invert_side_time(v, t, (pi - phi) / d.omega, std::sqrt(-d.q_min), d.t_minus);
    }
    double depth = s * s;
    double q = t - std::copysign(depth, t);
    double speed = std::sqrt(2.0 * std::fmax(v.gap(t, depth), 0.0));
    return {q, theta > 0.0 ? -speed : speed};
}

inline PhasePoint state_of_angle(const Potential1D& v, double e, double theta) {
    return state_of_angle(v, oscillator_data(v, e), theta);
}

/// Action-angle chart of one oscillator at fixed energy. The linear oscillator
/// uses its closed form; other potentials use Chebyshev interpolants of
/// (q, p) on the upper half-orbit theta in [0, pi], sampled from
/// state_of_angle, and extended by q(-theta) = q(theta), p(-theta) = -p(theta).
class OscillatorChart {
public:
    OscillatorChart() = default;

    OscillatorChart(const Potential1D& v, double e) : v_(v), d_(oscillator_data(v, e)) {
        if (v_.closed_form()) return;
        v_.check_shape(d_.q_min, d_.q_max);
        build();
    }

    const Potential1D& potential() const { return v_; }
    const OscillatorData& data() const { return d_; }
    double energy() const { return d_.e; }
    double omega() const { return d_.omega; }
    double period() const { return d_.T; }

    PhasePoint state_at(double theta) const {
        theta = wrap_angle(theta);
        if (v_.closed_form()) {
            double a = std::sqrt(2.0 * d_.e);
            return {a / v_.omega() * std::cos(theta), -a * std::sin(theta)};
        }
        double phi = std::fabs(theta);
        double p = ps_(phi);
        return {qs_(phi), theta >= 0.0 ? p : -p};
    }

    double q_at(double theta) const {
        if (v_.closed_form()) return std::sqrt(2.0 * d_.e) / v_.omega() * std::cos(theta);
        return qs_(std::fabs(wrap_angle(theta)));
    }

    /// Angle of a point on (or very near) this energy shell.
    double angle_of(double q, double p) const {
        if (v_.closed_form()) return wrap_angle(std::atan2(-p / v_.omega(), q));
        double qc = 0.5 * (d_.q_max + d_.q_min), qh = 0.5 * (d_.q_max - d_.q_min);
        double pm = std::sqrt(2.0 * d_.e);
        double th = std::atan2(-p / pm, (q - qc) / qh);
        for (int it = 0; it < 40; ++it) {
            auto s = state_at(th);
            double rq = (s.q - q) / qh, rp = (s.p - p) / pm;
            double jq = s.p / d_.omega / qh, jp = -v_.derivative(s.q) / d_.omega / pm;
            double step = -(rq * jq + rp * jp) / (jq * jq + jp * jp);
            step = std::fmax(-0.5, std::fmin(0.5, step));
            th += step;
            if (std::fabs(step) < 1e-15) break;
        }
        return wrap_angle(th);
    }

    /// Angle in [0, pi] at which the upper half-orbit passes q.
    double upper_angle_of_position(double q) const {
        if (q >= d_.q_max) return 0.0;
        if (q <= d_.q_min) return pi;
        if (v_.closed_form()) return detail::lo_wall_angle(v_.omega(), q, d_.e);
        return solve_bracketed([&](double phi) { return qs_(phi) - q; }, 0.0, pi);
    }

    std::size_t chart_size() const { return qs_.size(); }

private:
    void build() {
        std::size_t n = 32;
        std::vector<double> qv, pv;
        for (;;) {
            auto x = ChebyshevSeries::nodes(0.0, pi, n);
            std::vector<double> nq(n + 1), np(n + 1);
            for (std::size_t k = 0; k <= n; ++k) {
                if (!qv.empty() && k % 2 == 0) {
                    nq[k] = qv[k / 2];
                    np[k] = pv[k / 2];
                    continue;
                }
                auto s = state_of_angle(v_, d_, x[k]);
                nq[k] = s.q;
                np[k] = s.p;
            }
            nq[0] = d_.q_min;
            np[0] = 0.0;
            nq[n] = d_.q_max;
            np[n] = 0.0;
            qs_ = ChebyshevSeries(0.0, pi, nq);
            ps_ = ChebyshevSeries(0.0, pi, np);
            bool ok = qs_.tail(4) <= 1e-14 * qs_.scale() && ps_.tail(4) <= 1e-14 * ps_.scale();
            if (ok) return;
            if (n >= 2048) throw NumericalError("action-angle chart did not converge");
            qv = std::move(nq);
            pv = std::move(np);
            n *= 2;
        }
    }

    Potential1D v_;
    OscillatorData d_;
    ChebyshevSeries qs_, ps_;
};

}  // namespace stepiem
