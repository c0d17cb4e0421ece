#pragma once

#include "step_system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace stepiem {

/// A nonnegative real that may be +infinity, kept as an explicit marker.
struct ExtendedReal {
    double value = 0.0;
    bool infinite = false;

    static ExtendedReal finite(double v) { return {v, false}; }
    static ExtendedReal infinity() { return {std::numeric_limits<double>::infinity(), true}; }

    double get() const {
        if (infinite) throw DomainError("value is infinite");
        return value;
    }
};

struct ReturnMapParams {
    Region region = Region::disallowed;
    bool boundary = false;
    double e1 = 0.0, h = 0.0;
    double T1 = 0.0, T2 = 0.0;
    double T1_tilde = 0.0, T2_tilde = 0.0;  ///< impact-system periods (T_i when the wall is not hit)
    double theta1_hat = pi;
    double theta2_wall = pi;  ///< theta2 hat: wall angle, or pi when wall 2 is not hit
    double Theta2_smooth = 0.0;
    double Theta2 = 0.0;
    double Theta2_star = 0.0;
    std::optional<ExtendedReal> chi2;  ///< set on the (closed) step family
    std::optional<long long> K2;

    double chi2_frac() const {
        double c = chi2->get();
        return c - std::floor(c);
    }
};

inline ReturnMapParams compute_params(const StepConfig& cfg, const LevelSet& ls) {
    RegionClass rc = classify(cfg, ls);
    if (rc.tag == Region::disallowed) throw DomainError("level set lies in the disallowed region");
    if (!(ls.e1 > 0.0 && ls.e2() > 0.0)) throw DomainError("both oscillator energies must be positive");
    ReturnMapParams pr;
    pr.region = rc.tag;
    pr.boundary = rc.boundary;
    pr.e1 = ls.e1;
    pr.h = ls.h;
    const double e[2] = {ls.e1, ls.e2()};
    OscillatorData d[2] = {oscillator_data(cfg.potential(0), e[0]), oscillator_data(cfg.potential(1), e[1])};
    pr.T1 = d[0].T;
    pr.T2 = d[1].T;
    pr.theta1_hat = *rc.theta1_hat;
    pr.theta2_wall = *rc.theta2_hat;
    double tt[2];
    for (int i = 0; i < 2; ++i) {
        double th = *rc.theta_hat(i);
        tt[i] = (th != pi && e[i] > cfg.h_step(i)) ? partial_period(cfg.potential(i), d[i], cfg.q_wall(i))
                                                    : d[i].T * th / pi;
    }
    pr.T1_tilde = tt[0];
    pr.T2_tilde = tt[1];
    pr.Theta2_smooth = cfg.potential(0).closed_form() && cfg.potential(1).closed_form()
                           ? two_pi * cfg.potential(1).omega() / cfg.potential(0).omega()
                           : two_pi * pr.T1 / pr.T2;
    pr.Theta2 = pr.theta1_hat == pi ? pr.Theta2_smooth : pr.theta1_hat / pi * pr.Theta2_smooth;
    double c = 2.0 * pr.theta2_wall;
    pr.Theta2_star = c > 0.0 ? c * (pr.Theta2 / c - std::floor(pr.Theta2 / c)) : 0.0;
    if (pr.Theta2_star >= c) pr.Theta2_star = 0.0;
    if (pr.region == Region::step_family) {
        if (pr.T2_tilde == 0.0) {
            pr.chi2 = ExtendedReal::infinity();
        } else {
            double chi = (pr.T1 - pr.T1_tilde) / pr.T2_tilde;
            pr.chi2 = ExtendedReal::finite(chi);
            pr.K2 = static_cast<long long>(std::floor(chi));
        }
    }
    return pr;
}

/// Parameters of the return map to Sigma_2, by exchanging the two oscillators.
inline ReturnMapParams compute_params_sigma2(const StepConfig& cfg, const LevelSet& ls) {
    return compute_params(cfg.swapped(), LevelSet(ls.e2(), ls.h));
}

/// |Theta2_smooth - (2 theta2_wall chi2 + Theta2)|.
inline double functional_identity_residual(const ReturnMapParams& pr) {
    return std::fabs(pr.Theta2_smooth - (2.0 * pr.theta2_wall * pr.chi2->get() + pr.Theta2));
}

enum class PieceTag { JR, JK, JK1, A, B };

inline const char* to_string(PieceTag t) {
    switch (t) {
        case PieceTag::JR: return "J_R";
        case PieceTag::JK: return "J_K";
        case PieceTag::JK1: return "J_K+1";
        case PieceTag::A: return "A";
        case PieceTag::B: return "B";
    }
    return "?";
}

struct IemPiece {
    double lo = 0.0;      ///< left end, canonical in [base, base + circumference)
    double length = 0.0;  ///< may wrap past the end of the domain
    double shift = 0.0;   ///< unreduced phase gain; images are taken modulo the circumference
    PieceTag tag = PieceTag::A;
};

enum class DegeneracyKind { chi_integer, jr_left_at_cut, jr_image_at_cut, jk_endpoint_at_cut };

struct Degeneracy {
    DegeneracyKind kind;
    long long index = 0;  ///< K for chi_integer, M otherwise
    double residual = 0.0;

    std::string tag() const {
        switch (kind) {
            case DegeneracyKind::chi_integer: return "chi_integer:K=" + std::to_string(index);
            case DegeneracyKind::jr_left_at_cut: return "jr_left_at_cut:M=" + std::to_string(index);
            case DegeneracyKind::jr_image_at_cut: return "jr_image_at_cut:M=" + std::to_string(index);
            case DegeneracyKind::jk_endpoint_at_cut: return "jk_endpoint_at_cut:M=" + std::to_string(index);
        }
        return "?";
    }
};

/// Evaluates the three families of degeneracy conditions over the admissible
/// integers, reporting those that hold within tol.
inline std::vector<Degeneracy> degeneracy_check(const ReturnMapParams& pr, double tol = 1e-9) {
    if (pr.region != Region::step_family || !pr.chi2 || pr.chi2->infinite)
        throw DomainError("degeneracy conditions are defined on the step family");
    std::vector<Degeneracy> out;
    const double th = pr.theta2_wall, Th = pr.Theta2, Ts = pr.Theta2_smooth;
    const double frac = pr.chi2_frac();
    for (long long k = 0; k <= *pr.K2 + 1; ++k) {
        double r = std::fabs(Th - (Ts - 2.0 * double(k) * th));
        if (r < tol) out.push_back({DegeneracyKind::chi_integer, k, r});
    }
    long long m_hi = static_cast<long long>(std::ceil(Ts / two_pi)) + 2;
    for (long long m = -2; m <= m_hi; ++m) {
        double odd = two_pi * double(1 + 2 * m);
        double rp = std::fabs(Th - (2.0 * th + odd));
        double rm = std::fabs(Th - (-2.0 * th + odd));
        double rc = std::fabs(Th - (2.0 * th * (1.0 - 2.0 * frac) + odd));
        if (rp < tol) out.push_back({DegeneracyKind::jr_left_at_cut, m, rp});
        if (rm < tol) out.push_back({DegeneracyKind::jr_image_at_cut, m, rm});
        if (rc < tol) out.push_back({DegeneracyKind::jk_endpoint_at_cut, m, rc});
    }
    return out;
}

/// Piecewise rotation of a circle [base, base + circumference).
struct CircleIem {
    double base = -pi;
    double circumference = two_pi;
    std::vector<IemPiece> pieces;
    std::vector<int> permutation;  ///< pieces in circle order of their images, starting from pieces[0]'s image
    bool identity = false;
    bool reduces_to_rotation = false;
    bool minimal_rotation = false;
    std::optional<std::pair<long long, long long>> rational_rotation;  ///< (m, n): shift = C m / n
    std::vector<Degeneracy> degeneracies;

    double wrap(double x) const { return wrap_into(x, base, circumference); }

    int effective_pieces(double tol = 1e-9) const {
        return int(std::count_if(pieces.begin(), pieces.end(), [&](const IemPiece& p) { return p.length > tol; }));
    }

    /// Index of the piece containing theta; pieces are closed on the left.
    int piece_index(double theta) const {
        double x = wrap(theta);
        int best = -1;
        double best_miss = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < pieces.size(); ++k) {
            const auto& p = pieces[k];
            if (p.length <= 0.0) continue;
            double off = forward_offset(p.lo, x, circumference);
            if (off < p.length) return int(k);
            double miss = std::fmin(off - p.length, circumference - off);
            if (miss < best_miss) {
                best_miss = miss;
                best = int(k);
            }
        }
        return best;
    }

    double apply(double theta) const {
        int k = piece_index(theta);
        return wrap(wrap(theta) + pieces[k].shift);
    }

    double image_start(std::size_t k) const { return wrap(pieces[k].lo + pieces[k].shift); }
};

namespace detail {

inline void fill_permutation(CircleIem& ci) {
    std::vector<int> idx;
    for (std::size_t k = 0; k < ci.pieces.size(); ++k)
        if (ci.pieces[k].length > 0.0) idx.push_back(int(k));
    if (idx.empty()) return;
    double ref = ci.image_start(std::size_t(idx.front()));
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        auto off = [&](int k) {
            double o = forward_offset(ref, ci.image_start(std::size_t(k)), ci.circumference);
            return ci.circumference - o < 1e-12 ? 0.0 : o;
        };
        return off(a) < off(b);
    });
    ci.permutation = idx;
}

/// Smallest n <= n_max with rho within tol of m/n.
inline std::optional<std::pair<long long, long long>> rational_approx(double rho, long long n_max, double tol) {
    for (long long n = 1; n <= n_max; ++n) {
        double m = std::round(rho * double(n));
        if (std::fabs(rho * double(n) - m) < tol * double(n)) return std::make_pair(static_cast<long long>(m), n);
    }
    return std::nullopt;
}

}  // namespace detail

/// Rotation by Theta2 on the circle of circumference 2 theta2_hat, as two pieces.
inline CircleIem build_rotation(const ReturnMapParams& pr) {
    if (pr.region == Region::step_family || pr.region == Region::disallowed)
        throw DomainError("rotation form applies to level sets outside the step family");
    CircleIem ci;
    ci.circumference = 2.0 * pr.theta2_wall;
    ci.base = -pr.theta2_wall;
    const double c = ci.circumference, s = pr.Theta2_star;
    ci.pieces.push_back({ci.base, c - s, s, PieceTag::A});
    ci.pieces.push_back({ci.wrap(ci.base + c - s), s, s - c, PieceTag::B});
    ci.identity = s < 1e-12 || c - s < 1e-12;
    ci.reduces_to_rotation = true;
    if (c > 0.0) {
        ci.rational_rotation = detail::rational_approx(s / c, 10000, 1e-11);
        ci.minimal_rotation = !ci.rational_rotation.has_value();
    }
    detail::fill_permutation(ci);
    return ci;
}

/// Three-piece circle map of a step-family level set, in circle order
/// (J_R, J_K, J_K+1) starting at theta_L = theta2_wall - Theta2 / 2.
inline CircleIem build_step_circle_iem(const ReturnMapParams& pr) {
    if (pr.region != Region::step_family || !pr.chi2 || pr.chi2->infinite)
        throw DomainError("three-piece map requires a step-family level set with finite chi2");
    CircleIem ci;
    const double th = pr.theta2_wall, Th = pr.Theta2;
    const double frac = pr.chi2_frac();
    const double K = double(*pr.K2);
    const double lr = two_pi - 2.0 * th, lk = 2.0 * th * (1.0 - frac), lk1 = 2.0 * th * frac;
    const double left = ci.wrap(th - 0.5 * Th);
    ci.pieces.push_back({left, lr, Th, PieceTag::JR});
    ci.pieces.push_back({ci.wrap(left + lr), lk, Th + 2.0 * th * frac + two_pi * K, PieceTag::JK});
    ci.pieces.push_back({ci.wrap(left + lr + lk), lk1, Th + 2.0 * th * (frac - 1.0) + two_pi * (K + 1.0), PieceTag::JK1});
    ci.reduces_to_rotation = lk1 <= 1e-9 || lk <= 1e-9;
    ci.degeneracies = degeneracy_check(pr);
    detail::fill_permutation(ci);
    return ci;
}

/// Builds whichever map applies to the level set.
inline CircleIem build_circle_iem(const ReturnMapParams& pr) {
    return pr.region == Region::step_family ? build_step_circle_iem(pr) : build_rotation(pr);
}

struct FundamentalInterval {
    double lo = 0.0, hi = 0.0;
    double shift = 0.0;  ///< image is [lo + shift, hi + shift) inside the domain
    int piece = 0;       ///< index of the circle piece it came from
    PieceTag tag = PieceTag::A;
};

/// Interval exchange on [base, base + length) induced from a circle map.
struct FundamentalIem {
    double base = -pi;
    double length = two_pi;
    std::vector<FundamentalInterval> intervals;
    double cut = -pi;                  ///< the domain end point
    std::optional<double> cut_preimage;
    bool coincident_cuts = false;      ///< preimage of the cut is the cut itself
    bool degenerate = false;           ///< fewer intervals than the generic count
    int dropped = 0;                   ///< zero-length intervals removed

    int find(double theta) const {
        double x = wrap_into(theta, base, length);
        auto it = std::upper_bound(intervals.begin(), intervals.end(), x,
                                   [](double v, const FundamentalInterval& iv) { return v < iv.lo; });
        int k = int(it - intervals.begin()) - 1;
        return std::max(k, 0);
    }

    double apply(double theta) const {
        const auto& iv = intervals[std::size_t(find(theta))];
        return wrap_into(wrap_into(theta, base, length) + iv.shift, base, length);
    }
};

inline FundamentalIem induce_fundamental(const CircleIem& ci) {
    FundamentalIem f;
    f.base = ci.base;
    f.length = ci.circumference;
    f.cut = ci.base;
    const double C = ci.circumference, tol = 1e-12;
    if (!(C > 0.0)) return f;
    std::vector<double> pts{ci.base};
    int effective = 0;
    for (const auto& p : ci.pieces) {
        if (p.length <= 0.0) continue;
        ++effective;
        pts.push_back(ci.wrap(p.lo));
        double off = forward_offset(p.lo, ci.base - p.shift, C);
        if (off < p.length) f.cut_preimage = ci.wrap(p.lo + off);
    }
    if (f.cut_preimage) {
        double cp = *f.cut_preimage;
        if (circle_distance(cp, ci.base, C) < tol) {
            f.coincident_cuts = true;
        } else {
            pts.push_back(cp);
        }
    }
    std::sort(pts.begin(), pts.end());
    std::vector<double> uniq;
    for (double x : pts)
        if (uniq.empty() || x - uniq.back() >= tol) uniq.push_back(x);
    if (uniq.size() > 1 && ci.base + C - uniq.back() < tol) uniq.pop_back();
    uniq.push_back(ci.base + C);
    for (std::size_t k = 0; k + 1 < uniq.size(); ++k) {
        double a = uniq[k], b = uniq[k + 1];
        if (b - a < tol) {
            ++f.dropped;
            continue;
        }
        int idx = ci.piece_index(0.5 * (a + b));
        double img = ci.wrap(a + ci.pieces[std::size_t(idx)].shift);
        if (ci.base + C - img < tol) img = ci.base;
        f.intervals.push_back({a, b, img - a, idx, ci.pieces[std::size_t(idx)].tag});
    }
    int generic = effective + (effective > 1 ? 2 : 1);
    if (ci.reduces_to_rotation && effective >= 2) generic = 2;
    f.degenerate = int(f.intervals.size()) < generic || f.dropped > 0;
    return f;
}

/// Interval end points of the three-piece map, chained from theta_L.
struct EndpointChain {
    double left_JR, right_JR;
    double left_JK, right_JK;
    double left_JK1, right_JK1;
    double image_left_JR, image_left_JK1, image_left_JK;
};

inline EndpointChain endpoint_chain(const ReturnMapParams& pr) {
    const double th = pr.theta2_wall, Th = pr.Theta2;
    const double frac = pr.chi2_frac();
    const double lr = two_pi - 2.0 * th, lk = 2.0 * th * (1.0 - frac), lk1 = 2.0 * th * frac;
    EndpointChain c{};
    c.left_JR = th - 0.5 * Th;
    c.image_left_JR = th + 0.5 * Th;
    c.right_JR = c.left_JR + lr;
    c.left_JK = c.right_JR;
    c.image_left_JK1 = c.right_JR + Th;
    c.right_JK = c.left_JK + lk;
    c.left_JK1 = c.right_JK;
    c.image_left_JK = c.image_left_JK1 + lk1;
    c.right_JK1 = c.left_JR + two_pi;
    return c;
}

}  // namespace stepiem
