#pragma once

#include "iem.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace stepiem {

/// Two linear oscillators and a step.
struct LoSystem {
    double omega1 = 1.0, omega2 = 1.0;
    double q1_wall = -0.5, q2_wall = -0.5;

    double c1() const { return omega1 * q1_wall; }
    double c2() const { return omega2 * q2_wall; }
    double h1_step() const { return 0.5 * c1() * c1(); }
    double h2_step() const { return 0.5 * c2() * c2(); }
    double h_step() const { return h1_step() + h2_step(); }
    double ratio() const { return omega2 / omega1; }

    /// Quadrant label, e.g. "(-,+)" for q1_wall < 0 < q2_wall.
    std::string quadrant() const {
        return std::string("(") + (q1_wall < 0 ? "-" : "+") + "," + (q2_wall < 0 ? "-" : "+") + ")";
    }

    StepConfig step_config() const {
        return StepConfig(Potential1D::linear_oscillator(omega1), Potential1D::linear_oscillator(omega2), q1_wall,
                          q2_wall);
    }

    /// The same system seen from the other section (1 <-> 2).
    LoSystem swapped() const { return {omega2, omega1, q2_wall, q1_wall}; }
};

namespace detail {

inline double lo_angle_checked(double omega, double q_wall, double e) {
    double c = omega * q_wall;
    double r = 2.0 * e - c * c;
    if (r < -1e-14 * c * c) throw DomainError("energy below the wall energy (arccos argument outside [-1, 1])");
    return std::atan2(std::sqrt(std::fmax(r, 0.0)), c);
}

}  // namespace detail

/// Closed-form parameters from the two oscillator energies; used directly by
/// the edge tables so that edge energies are exact.
inline ReturnMapParams lo_params_energies(const LoSystem& s, double e1, double e2) {
    ReturnMapParams pr;
    pr.region = Region::step_family;
    pr.e1 = e1;
    pr.h = e1 + e2;
    pr.boundary = e1 == s.h1_step() || e2 == s.h2_step();
    const double a = detail::lo_angle_checked(s.omega1, s.q1_wall, e1);
    const double b = detail::lo_angle_checked(s.omega2, s.q2_wall, e2);
    const double r = s.ratio();
    pr.T1 = two_pi / s.omega1;
    pr.T2 = two_pi / s.omega2;
    pr.T1_tilde = 2.0 * a / s.omega1;
    pr.T2_tilde = 2.0 * b / s.omega2;
    pr.theta1_hat = a;
    pr.theta2_wall = b;
    pr.Theta2_smooth = two_pi * r;
    pr.Theta2 = 2.0 * r * a;
    pr.Theta2_star = b > 0.0 ? 2.0 * b * (pr.Theta2 / (2.0 * b) - std::floor(pr.Theta2 / (2.0 * b))) : 0.0;
    if (b == 0.0) {
        pr.chi2 = ExtendedReal::infinity();
    } else {
        double chi = r * (pi - a) / b;
        pr.chi2 = ExtendedReal::finite(chi);
        pr.K2 = static_cast<long long>(std::floor(chi));
    }
    return pr;
}

inline ReturnMapParams lo_params(const LoSystem& s, double e1, double h) {
    if (!(e1 >= s.h1_step() && h - e1 >= s.h2_step()) || !(h > s.h_step()))
        throw DomainError("(e1, h) is not in the step family");
    return lo_params_energies(s, e1, h - e1);
}

/// theta_1*(h) = arccos(omega1 q1 / sqrt(2h - (omega2 q2)^2)), the wall
/// angle of oscillator 1 at the upper edge of the step family.
inline double theta1_star(const LoSystem& s, double h) {
    double c1 = s.c1(), c2 = s.c2();
    return std::atan2(std::sqrt(std::fmax(2.0 * h - c2 * c2 - c1 * c1, 0.0)), c1);
}

inline double theta2_star(const LoSystem& s, double h) { return theta1_star(s.swapped(), h); }

/// d chi2 / d e1 along the iso-energy family.
inline double chi2_derivative(const LoSystem& s, double e1, double h) {
    const double e2 = h - e1, c1 = s.c1(), c2 = s.c2();
    const double a = detail::lo_angle_checked(s.omega1, s.q1_wall, e1);
    const double b = detail::lo_angle_checked(s.omega2, s.q2_wall, e2);
    const double da = c1 / (2.0 * e1 * std::sqrt(2.0 * e1 - c1 * c1));
    const double db_de2 = c2 / (2.0 * e2 * std::sqrt(2.0 * e2 - c2 * c2));
    return s.ratio() * (-da * b + (pi - a) * db_de2) / (b * b);
}

/// d theta1_wall / d e1 and d theta2_wall / d e1 on the iso-energy family.
inline std::pair<double, double> wall_angle_derivatives(const LoSystem& s, double e1, double h) {
    const double e2 = h - e1, c1 = s.c1(), c2 = s.c2();
    return {c1 / (2.0 * e1 * std::sqrt(2.0 * e1 - c1 * c1)), -c2 / (2.0 * e2 * std::sqrt(2.0 * e2 - c2 * c2))};
}

/// Interior e1 grid of the open step-family interval, clustered at both edges.
inline std::vector<double> clustered_grid(double a, double b, std::size_t n, int edge_decades = 14) {
    std::vector<double> g;
    for (int j = edge_decades; j >= 3; --j) g.push_back(a + (b - a) * std::pow(10.0, -j));
    for (std::size_t k = 1; k < n; ++k) g.push_back(a + (b - a) * 0.5 * (1.0 - std::cos(pi * double(k) / double(n))));
    for (int j = 3; j <= edge_decades; ++j) g.push_back(b - (b - a) * std::pow(10.0, -j));
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    g.erase(std::remove_if(g.begin(), g.end(), [&](double x) { return !(x > a && x < b); }), g.end());
    return g;
}

struct MonotonicityVerdict {
    bool monotone = false;
    std::optional<std::pair<double, double>> bracket;  ///< e1 interval where chi2' changes sign
};

inline MonotonicityVerdict chi2_monotonicity(const LoSystem& s, double h) {
    if (!(h > s.h_step())) throw DomainError("h must exceed the step energy");
    MonotonicityVerdict v;
    v.monotone = s.q1_wall * s.q2_wall < 0.0;
    if (v.monotone) return v;
    const double a = s.h1_step(), b = h - s.h2_step();
    auto g = clustered_grid(a, b, 2000);
    double prev = chi2_derivative(s, g.front(), h);
    for (std::size_t k = 1; k < g.size(); ++k) {
        double cur = chi2_derivative(s, g[k], h);
        if ((prev < 0.0) != (cur < 0.0)) {
            double x = solve_bracketed([&](double e) { return chi2_derivative(s, e, h); }, g[k - 1], g[k], prev, cur);
            double w = 1e-9 * (b - a);
            v.bracket = std::make_pair(std::fmax(g[k - 1], x - w), std::fmin(g[k], x + w));
            break;
        }
        prev = cur;
    }
    return v;
}

/// Shape of a function along the interval, from the sign pattern of its derivative.
inline std::string monotonicity_mark(const std::vector<double>& derivative_samples) {
    std::vector<int> signs;
    for (double d : derivative_samples) {
        int sg = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
        if (sg != 0 && (signs.empty() || signs.back() != sg)) signs.push_back(sg);
    }
    if (signs.empty()) return "constant";
    if (signs.size() == 1) return signs[0] > 0 ? "increasing" : "decreasing";
    if (signs.size() == 2) return signs[0] > 0 ? "up-down" : "down-up";
    return "oscillating";
}

/// Edge values of the wall angles, chi2 and Theta2 on the step family at
/// energy h, computed from the closed forms and from the tabulated formulas.
struct LoEdgeTable {
    std::string quadrant;
    double h = 0.0;
    double theta1_star = 0.0, theta2_star = 0.0;

    // wall angles: theta1(h1_step), theta2(h - h1_step), theta1(h - h2_step), theta2(h2_step)
    double th1_lower = 0.0, th2_lower = 0.0, th1_upper = 0.0, th2_upper = 0.0;
    double th1_lower_tab = 0.0, th2_lower_tab = 0.0, th1_upper_tab = 0.0, th2_upper_tab = 0.0;

    ExtendedReal chi_lower, chi_upper;
    ExtendedReal chi_lower_tab, chi_upper_tab;          ///< LO table
    ExtendedReal chi_lower_general, chi_upper_general;  ///< general-potential table with Theta2_smooth
    double Theta_lower = 0.0, Theta_upper = 0.0;
    double Theta_lower_tab = 0.0, Theta_upper_tab = 0.0;
    double Theta_lower_general = 0.0, Theta_upper_general = 0.0;

    std::string chi_mark, Theta_mark;          ///< observed along the interval
    std::string chi_mark_tab, Theta_mark_tab;  ///< tabulated
};

inline LoEdgeTable edge_table(const LoSystem& s, double h) {
    if (!(h > s.h_step())) throw DomainError("h must exceed the step energy");
    LoEdgeTable t;
    t.quadrant = s.quadrant();
    t.h = h;
    const double r = s.ratio(), Ts = two_pi * r;
    const double h1 = s.h1_step(), h2 = s.h2_step();
    t.theta1_star = theta1_star(s, h);
    t.theta2_star = theta2_star(s, h);

    auto lower = lo_params_energies(s, h1, h - h1);
    auto upper = lo_params_energies(s, h - h2, h2);
    t.th1_lower = lower.theta1_hat;
    t.th2_lower = lower.theta2_wall;
    t.th1_upper = upper.theta1_hat;
    t.th2_upper = upper.theta2_wall;
    t.chi_lower = *lower.chi2;
    t.chi_upper = *upper.chi2;
    t.Theta_lower = lower.Theta2;
    t.Theta_upper = upper.Theta2;

    const bool n1 = s.q1_wall < 0.0, n2 = s.q2_wall < 0.0;
    const double t1s = t.theta1_star, t2s = t.theta2_star;
    t.th1_lower_tab = n1 ? pi : 0.0;
    t.th2_lower_tab = t2s;
    t.th1_upper_tab = t1s;
    t.th2_upper_tab = n2 ? pi : 0.0;

    t.chi_lower_tab = ExtendedReal::finite(n1 ? 0.0 : r * pi / t2s);
    t.chi_upper_tab = n2 ? ExtendedReal::finite(r * (1.0 - t1s / pi)) : ExtendedReal::infinity();
    t.Theta_lower_tab = n1 ? two_pi * r : 0.0;
    t.Theta_upper_tab = 2.0 * r * t1s;

    t.chi_lower_general = ExtendedReal::finite(n1 ? 0.0 : Ts / (2.0 * t2s));
    t.chi_upper_general = n2 ? ExtendedReal::finite(Ts * (1.0 - t1s / pi) / two_pi) : ExtendedReal::infinity();
    t.Theta_lower_general = n1 ? Ts : 0.0;
    t.Theta_upper_general = Ts * t1s / pi;

    t.chi_mark_tab = n1 ? (n2 ? "up-down" : "increasing") : (n2 ? "decreasing" : "down-up");
    t.Theta_mark_tab = n1 ? "decreasing" : "increasing";

    auto g = clustered_grid(h1, h - h2, 400, 8);
    std::vector<double> dchi, dTheta;
    for (double e : g) {
        dchi.push_back(chi2_derivative(s, e, h));
        dTheta.push_back(2.0 * r * wall_angle_derivatives(s, e, h).first);
    }
    t.chi_mark = monotonicity_mark(dchi);
    t.Theta_mark = monotonicity_mark(dTheta);
    return t;
}

/// Large-h limits of the edge values and the oscillation counts.
struct LargeEnergyRow {
    std::string quadrant;
    double chi_lower = 0.0;
    ExtendedReal chi_upper;
    double Theta_lower = 0.0, Theta_upper = 0.0;
    std::optional<long long> n_osc2_bound;  ///< nullopt means infinitely many
    bool n_osc2_is_lower_bound = false;
    std::optional<long long> n_osc1_bound;
    bool n_osc1_is_lower_bound = false;
};

inline LargeEnergyRow large_energy_row(const LoSystem& s) {
    LargeEnergyRow row;
    row.quadrant = s.quadrant();
    const double r = s.ratio(), ri = 1.0 / r;
    const bool n1 = s.q1_wall < 0.0, n2 = s.q2_wall < 0.0;
    row.chi_lower = n1 ? 0.0 : 2.0 * r;
    row.chi_upper = n2 ? ExtendedReal::finite(0.5 * r) : ExtendedReal::infinity();
    row.Theta_lower = n1 ? two_pi * r : 0.0;
    row.Theta_upper = pi * r;
    if (n2) {
        row.n_osc2_bound = static_cast<long long>(std::floor((n1 ? 0.5 : 1.5) * r));
        row.n_osc2_is_lower_bound = n1;
    }
    if (n1) {
        row.n_osc1_bound = static_cast<long long>(std::floor((n2 ? 0.5 : 1.5) * ri));
        row.n_osc1_is_lower_bound = n2;
    }
    return row;
}

enum class Section { sigma1, sigma2 };

struct CrossingCount {
    bool infinite = false;
    std::vector<double> e1;        ///< located level sets, ascending in e1
    std::vector<long long> value;  ///< the integer chi takes at each
    long long count() const { return static_cast<long long>(e1.size()); }
};

namespace detail {

/// Root-solves chi(e) = n for all integers n crossed between grid nodes.
template <class Chi>
std::vector<std::pair<double, long long>> integer_crossings(Chi&& chi, const std::vector<double>& g,
                                                            long long n_cap) {
    std::vector<std::pair<double, long long>> out;
    std::vector<double> v(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) v[k] = chi(g[k]);
    for (std::size_t k = 0; k + 1 < g.size(); ++k) {
        double lo = std::fmin(v[k], v[k + 1]), hi = std::fmax(v[k], v[k + 1]);
        for (long long n = static_cast<long long>(std::floor(lo)) + 1; double(n) <= hi && n <= n_cap; ++n) {
            double x = solve_bracketed([&](double e) { return chi(e) - double(n); }, g[k], g[k + 1],
                                       v[k] - double(n), v[k + 1] - double(n));
            out.emplace_back(x, n);
        }
    }
    return out;
}

}  // namespace detail

/// Level sets of the step family at energy h where chi (of the chosen
/// section) is an integer. When chi diverges at an edge, the first
/// max_hits crossings from the lower end are returned and `infinite` is set.
inline CrossingCount count_chi2_integer_crossings(const LoSystem& s0, double h, Section which = Section::sigma2,
                                                  std::size_t max_hits = 50) {
    if (!(h > s0.h_step())) throw DomainError("h must exceed the step energy");
    const LoSystem s = which == Section::sigma2 ? s0 : s0.swapped();
    const double a = s.h1_step(), b = h - s.h2_step();
    auto chi = [&](double e) { return lo_params_energies(s, e, h - e).chi2->get(); };
    CrossingCount cc;
    cc.infinite = s.q2_wall > 0.0;
    double b_eff = b;
    long long n_cap = std::numeric_limits<long long>::max();
    auto g0 = clustered_grid(a, b, 2000);
    if (cc.infinite) {
        double lowest = chi(g0.front());
        for (double e : g0) lowest = std::fmin(lowest, chi(e));
        n_cap = static_cast<long long>(std::floor(lowest)) + static_cast<long long>(max_hits) + 1;
        double d = 0.5 * (b - a);
        while (chi(b - d) <= double(n_cap) + 1.0) d *= 0.5;
        b_eff = b - d;
        g0 = clustered_grid(a, b_eff, 2000);
        g0.push_back(b_eff);
    }
    auto hits = detail::integer_crossings(chi, g0, n_cap);
    std::sort(hits.begin(), hits.end());
    if (cc.infinite && hits.size() > max_hits) hits.resize(max_hits);
    for (auto& [e, n] : hits) {
        cc.e1.push_back(which == Section::sigma2 ? e : h - e);
        cc.value.push_back(n);
    }
    if (which == Section::sigma1) {
        std::vector<std::size_t> idx(cc.e1.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](auto x, auto y) { return cc.e1[x] < cc.e1[y]; });
        CrossingCount sorted = cc;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            sorted.e1[k] = cc.e1[idx[k]];
            sorted.value[k] = cc.value[idx[k]];
        }
        cc = sorted;
    }
    return cc;
}

/// One tabulated edge value near the step energy and its sqrt(eta)
/// asymptotic form c0 + c1 sqrt(eta).
struct NearThresholdEntry {
    std::string name;
    ExtendedReal computed;
    ExtendedReal asymptotic;
    double ratio = 1.0;  ///< (computed - c0) / (c1 sqrt(eta)); exact entries report 1
};

struct NearThresholdRow {
    std::string quadrant;
    double eta = 0.0;
    std::vector<NearThresholdEntry> entries;
};

inline NearThresholdRow near_threshold_table(const LoSystem& s, double eta) {
    if (!(eta > 0.0)) throw DomainError("eta must be positive");
    NearThresholdRow row;
    row.quadrant = s.quadrant();
    row.eta = eta;
    const double h = s.h_step() + eta, r = s.ratio();
    const double x1 = std::sqrt(eta / s.h1_step()), x2 = std::sqrt(eta / s.h2_step());
    auto t = edge_table(s, h);
    const bool n1 = s.q1_wall < 0.0, n2 = s.q2_wall < 0.0;
    auto entry = [&](std::string name, ExtendedReal got, double c0, double c1, double scale, bool exact) {
        NearThresholdEntry en{std::move(name), got, ExtendedReal::finite(c0 + c1 * scale), 1.0};
        if (got.infinite) {
            en.asymptotic = ExtendedReal::infinity();
        } else if (!exact) {
            en.ratio = (got.value - c0) / (c1 * scale);
        }
        row.entries.push_back(en);
    };
    if (n1) {
        entry("chi2_lower", t.chi_lower, 0.0, 0.0, 0.0, true);
    } else if (n2) {
        entry("chi2_lower", t.chi_lower, r, r / pi, x2, false);
    } else {
        entry("chi2_lower", t.chi_lower, 0.0, pi * r, 1.0 / x2, false);
    }
    if (n2) {
        entry("chi2_upper", t.chi_upper, n1 ? 0.0 : r, n1 ? r / pi : -r / pi, x1, false);
    } else {
        entry("chi2_upper", t.chi_upper, 0.0, 0.0, 0.0, true);
    }
    entry("Theta2_lower", ExtendedReal::finite(t.Theta_lower), n1 ? two_pi * r : 0.0, 0.0, 0.0, true);
    if (n1) {
        entry("Theta2_upper", ExtendedReal::finite(t.Theta_upper), two_pi * r, -2.0 * r, x1, false);
    } else {
        entry("Theta2_upper", ExtendedReal::finite(t.Theta_upper), 0.0, 2.0 * r, x1, false);
    }
    entry("theta1_star", ExtendedReal::finite(t.theta1_star), n1 ? pi : 0.0, n1 ? -1.0 : 1.0, x1, false);
    entry("theta2_star", ExtendedReal::finite(t.theta2_star), n2 ? pi : 0.0, n2 ? -1.0 : 1.0, x2, false);
    return row;
}

}  // namespace stepiem
