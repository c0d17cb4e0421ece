#pragma once

#include "flow_sim.hpp"
#include "iem.hpp"
#include "lo_closed_forms.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <functional>
#include <mutex>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace stepiem {

/// Runs body(0..n-1) on up to `workers` threads. Each index is handled by
/// exactly one thread; callers write results into per-index slots.
inline void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t k = 0; k < n; ++k) body(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex m;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < std::min<std::size_t>(workers, n); ++w) {
        pool.emplace_back([&] {
            for (std::size_t k; (k = next.fetch_add(1)) < n;) {
                try {
                    body(k);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(m);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

inline unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

struct ConjugacyOptions {
    std::uint64_t seed = 1;
    double guard_band = 1e-6;   ///< initial phases this close to a piece end point are redrawn
    double resync_band = 1e-7;  ///< orbit points this close to an end point restart from the flow
    unsigned workers = 1;
    SectionOptions section = {};
};

struct ConjugacyReport {
    double max_dev_angle = 0.0;     ///< flow sample vs iterated map
    double max_one_step_dev = 0.0;  ///< flow sample vs map applied to the previous flow sample
    double max_dev_time = 0.0;      ///< return time vs the T1~ / T1 prediction of the map piece
    std::size_t n_samples = 0;
    std::size_t n_returns = 0;
    std::size_t n_corner_truncations = 0;
    std::size_t n_resyncs = 0;
    std::vector<double> initial_phases;
};

/// Distance from x to the nearest piece end point of the circle map.
inline double distance_to_cut(const CircleIem& ci, double x) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& p : ci.pieces) {
        if (p.length <= 0.0) continue;
        d = std::fmin(d, circle_distance(x, p.lo, ci.circumference));
        d = std::fmin(d, circle_distance(x, p.lo + p.length, ci.circumference));
    }
    return d;
}

/// Return time predicted for a phase in the given piece.
inline double predicted_return_time(const ReturnMapParams& pr, const CircleIem& ci, double x) {
    if (pr.region != Region::step_family) return pr.theta1_hat == pi ? pr.T1 : pr.T1_tilde;
    return ci.pieces[std::size_t(ci.piece_index(x))].tag == PieceTag::JR ? pr.T1_tilde : pr.T1;
}

inline ConjugacyReport conjugacy_check(const StepConfig& cfg, const LevelSet& ls, std::size_t n_samples,
                                       std::size_t n_iterates, const ConjugacyOptions& opt = {}) {
    const ReturnMapParams pr = compute_params(cfg, ls);
    const CircleIem ci = build_circle_iem(pr);
    ConjugacyReport rep;
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    while (rep.initial_phases.size() < n_samples) {
        double x = ci.base + ci.circumference * u(rng);
        if (x >= ci.base + ci.circumference) continue;
        if (distance_to_cut(ci, x) < opt.guard_band) continue;
        rep.initial_phases.push_back(x);
    }
    struct Partial {
        double dev = 0.0, one = 0.0, time = 0.0;
        std::size_t returns = 0, resyncs = 0;
        bool truncated = false;
    };
    std::vector<Partial> parts(n_samples);
    parallel_for(n_samples, opt.workers, [&](std::size_t s) {
        Partial& pt = parts[s];
        const double x0 = rep.initial_phases[s];
        SectionRun run = return_map_samples(cfg, ls, x0, n_iterates, opt.section);
        pt.truncated = run.truncated;
        double x = x0, y = x0;
        for (const auto& smp : run.samples) {
            if (distance_to_cut(ci, x) < opt.resync_band) {
                x = y;
                ++pt.resyncs;
            }
            double expected_time = predicted_return_time(pr, ci, x);
            x = ci.apply(x);
            if (distance_to_cut(ci, y) >= opt.resync_band)
                pt.one = std::fmax(pt.one, circle_distance(ci.apply(y), smp.theta2, ci.circumference));
            y = smp.theta2;
            pt.dev = std::fmax(pt.dev, circle_distance(x, y, ci.circumference));
            pt.time = std::fmax(pt.time, std::fabs(smp.return_time - expected_time));
            ++pt.returns;
        }
    });
    for (const auto& pt : parts) {
        rep.max_dev_angle = std::fmax(rep.max_dev_angle, pt.dev);
        rep.max_one_step_dev = std::fmax(rep.max_one_step_dev, pt.one);
        rep.max_dev_time = std::fmax(rep.max_dev_time, pt.time);
        rep.n_returns += pt.returns;
        rep.n_resyncs += pt.resyncs;
        rep.n_corner_truncations += pt.truncated ? 1 : 0;
    }
    rep.n_samples = n_samples;
    return rep;
}

struct OrbitVerdict {
    bool periodic = false;
    long long period = 0;         ///< when periodic
    long long iterations = 0;     ///< AperiodicUpTo(iterations) otherwise
    double witness = 0.0;         ///< initial angle
    double recurrence_gap = 0.0;  ///< smallest return distance seen (the closing distance if periodic)
};

/// Periodicity test: the first n with |F^n(x) - x| < tol on the circle.
template <class Map>
OrbitVerdict classify_orbit(const Map& f, double circumference, double theta, long long max_iter, double tol = 1e-9) {
    if (max_iter < 1) throw DomainError("max_iter must be at least 1");
    OrbitVerdict v;
    v.witness = theta;
    v.recurrence_gap = std::numeric_limits<double>::infinity();
    double x = theta;
    for (long long n = 1; n <= max_iter; ++n) {
        x = f(x);
        double d = circle_distance(x, theta, circumference);
        v.recurrence_gap = std::fmin(v.recurrence_gap, d);
        if (d < tol) {
            v.periodic = true;
            v.period = n;
            v.recurrence_gap = d;
            return v;
        }
    }
    v.iterations = max_iter;
    return v;
}

inline OrbitVerdict classify_orbit(const CircleIem& ci, double theta, long long max_iter, double tol = 1e-9) {
    return classify_orbit([&](double x) { return ci.apply(x); }, ci.circumference, theta, max_iter, tol);
}

inline OrbitVerdict classify_orbit(const FundamentalIem& fi, double theta, long long max_iter, double tol = 1e-9) {
    return classify_orbit([&](double x) { return fi.apply(x); }, fi.length, theta, max_iter, tol);
}

enum class SpecialKind { chi2_integer, theta2_rational, degeneracy };

inline const char* to_string(SpecialKind k) {
    switch (k) {
        case SpecialKind::chi2_integer: return "chi2-integer";
        case SpecialKind::theta2_rational: return "theta2-rational";
        case SpecialKind::degeneracy: return "degeneracy";
    }
    return "?";
}

struct SpecialLevelSet {
    double e1 = 0.0;
    ReturnMapParams params;
    std::string condition;  ///< e.g. "chi2=3", "Theta2=2pi*1/3", "jr_left_at_cut:M=0"
    std::string certificate;
    bool verified = false;
};

struct SpecialOptions {
    long long n_max = 7;          ///< largest denominator for theta2-rational
    std::size_t max_hits = 50;    ///< cap when infinitely many level sets exist
    std::size_t grid = 2000;
    std::size_t probe_points = 64;
};

namespace detail {

/// Grid scan of g over the open interval (a, b) plus bracketed refinement of
/// every sign change; hits whose residual exceeds tol are discarded (jumps).
template <class G>
std::vector<double> scan_roots(G&& g, const std::vector<double>& grid, double tol) {
    std::vector<double> roots;
    double x0 = grid.front(), g0 = g(x0);
    for (std::size_t k = 1; k < grid.size(); ++k) {
        double x1 = grid[k], g1 = g(x1);
        if (std::isfinite(g0) && std::isfinite(g1) && ((g0 < 0.0) != (g1 < 0.0) || g1 == 0.0)) {
            double r = g1 == 0.0 ? x1 : solve_bracketed(g, x0, x1, g0, g1);
            if (std::fabs(g(r)) < tol) roots.push_back(r);
        }
        x0 = x1;
        g0 = g1;
    }
    return roots;
}

}  // namespace detail

inline std::vector<SpecialLevelSet> find_special_level_sets(const StepConfig& cfg, double h, SpecialKind kind,
                                                            const SpecialOptions& opt = {}) {
    auto iv = step_family_interval(cfg, h);
    if (!iv) throw DomainError("h must exceed the step energy");
    const double a = iv->first, b = iv->second;
    auto params = [&](double e1) { return compute_params(cfg, LevelSet(e1, h)); };
    std::vector<SpecialLevelSet> out;

    if (kind == SpecialKind::chi2_integer) {
        auto chi = [&](double e1) { return params(e1).chi2->get(); };
        auto grid = clustered_grid(a, b, opt.grid);
        long long n_cap = std::numeric_limits<long long>::max();
        if (cfg.q_wall(1) > 0.0) {
            double lowest = std::numeric_limits<double>::infinity();
            for (double e : grid) lowest = std::fmin(lowest, chi(e));
            n_cap = static_cast<long long>(std::floor(lowest)) + static_cast<long long>(opt.max_hits) + 1;
            double d = 0.5 * (b - a);
            while (chi(b - d) <= double(n_cap) + 1.0) d *= 0.5;
            grid = clustered_grid(a, b - d, opt.grid);
            grid.push_back(b - d);
        }
        auto hits = detail::integer_crossings(chi, grid, n_cap);
        std::sort(hits.begin(), hits.end());
        if (hits.size() > opt.max_hits) hits.resize(opt.max_hits);
        for (auto& [e1, n] : hits) {
            SpecialLevelSet s;
            s.e1 = e1;
            s.params = params(e1);
            s.condition = "chi2=" + std::to_string(n);
            auto ci = build_step_circle_iem(s.params);
            int eff = ci.effective_pieces();
            s.verified = eff == 2 && ci.reduces_to_rotation;
            s.certificate = "effective_pieces=" + std::to_string(eff);
            out.push_back(std::move(s));
        }
        return out;
    }

    auto grid = clustered_grid(a, b, opt.grid, 10);
    if (kind == SpecialKind::theta2_rational) {
        for (long long n = 1; n <= opt.n_max; ++n) {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (double e : grid) {
                double t = params(e).Theta2;
                lo = std::fmin(lo, t);
                hi = std::fmax(hi, t);
            }
            for (long long m = 1; double(m) * two_pi / double(n) <= hi; ++m) {
                if (std::gcd(m, n) != 1 || double(m) * two_pi / double(n) < lo) continue;
                const double target = two_pi * double(m) / double(n);
                auto roots = detail::scan_roots([&](double e) { return params(e).Theta2 - target; }, grid, 1e-9);
                for (double e1 : roots) {
                    SpecialLevelSet s;
                    s.e1 = e1;
                    s.params = params(e1);
                    s.condition = "Theta2=2pi*" + std::to_string(m) + "/" + std::to_string(n);
                    auto ci = build_step_circle_iem(s.params);
                    const bool narrow = 2.0 * s.params.theta2_wall < two_pi / double(n);
                    std::size_t in_I = 0, periodic = 0;
                    for (std::size_t k = 0; k < opt.probe_points; ++k) {
                        double x = -pi + two_pi * (double(k) + 0.5) / double(opt.probe_points);
                        bool stays = true;
                        double y = x;
                        for (long long j = 0; j < n && stays; ++j) {
                            stays = ci.pieces[std::size_t(ci.piece_index(y))].tag == PieceTag::JR;
                            y = ci.apply(y);
                        }
                        if (!stays) continue;
                        ++in_I;
                        auto v = classify_orbit(ci, x, n);
                        if (v.periodic && v.period == n) ++periodic;
                    }
                    s.verified = in_I == periodic && (!narrow || in_I > 0);
                    s.certificate = std::string(narrow ? "narrow" : "wide") + ";points_in_I=" + std::to_string(in_I) +
                                    ";n_periodic=" + std::to_string(periodic);
                    out.push_back(std::move(s));
                }
            }
        }
        std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.e1 < y.e1; });
        return out;
    }

    // degeneracy: endpoint families (the chi-integer family is the kind above)
    long long m_hi = static_cast<long long>(std::ceil(params(0.5 * (a + b)).Theta2_smooth / two_pi)) + 2;
    for (long long m = -2; m <= m_hi; ++m) {
        const double odd = two_pi * double(1 + 2 * m);
        struct Family {
            DegeneracyKind kind;
            std::function<double(const ReturnMapParams&)> residual;
        };
        std::vector<Family> fams = {
            {DegeneracyKind::jr_left_at_cut, [&](const ReturnMapParams& p) { return p.Theta2 - (2.0 * p.theta2_wall + odd); }},
            {DegeneracyKind::jr_image_at_cut, [&](const ReturnMapParams& p) { return p.Theta2 - (-2.0 * p.theta2_wall + odd); }},
            {DegeneracyKind::jk_endpoint_at_cut,
             [&](const ReturnMapParams& p) {
                 if (p.chi2->infinite) return std::numeric_limits<double>::quiet_NaN();
                 return p.Theta2 - (2.0 * p.theta2_wall * (1.0 - 2.0 * p.chi2_frac()) + odd);
             }},
        };
        for (const auto& fam : fams) {
            auto roots = detail::scan_roots([&](double e) { return fam.residual(params(e)); }, grid, 1e-9);
            for (double e1 : roots) {
                SpecialLevelSet s;
                s.e1 = e1;
                s.params = params(e1);
                Degeneracy want{fam.kind, m, 0.0};
                s.condition = want.tag();
                if (s.params.chi2->infinite) continue;
                auto tags = degeneracy_check(s.params);
                s.verified = std::any_of(tags.begin(), tags.end(), [&](const Degeneracy& d) { return d.tag() == want.tag(); });
                char buf[48];
                std::snprintf(buf, sizeof buf, "residual=%.3g", std::fabs(fam.residual(s.params)));
                s.certificate = buf;
                out.push_back(std::move(s));
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.e1 < y.e1; });
    return out;
}

struct StructureReport {
    double length_sum_error = 0.0;  ///< |sum of piece lengths - circumference|
    double tiling_error = 0.0;      ///< largest gap or overlap between consecutive images
    bool order_ok = true;           ///< image midpoints in the order J_R, J_K+1, J_K (three live pieces only)
};

/// Structural checks of a circle map that do not trust its permutation field.
inline StructureReport iem_structure(const CircleIem& ci) {
    StructureReport r;
    const double C = ci.circumference;
    double total = 0.0;
    for (const auto& p : ci.pieces) total += p.length;
    r.length_sum_error = std::fabs(total - C);
    std::vector<std::pair<double, double>> img;  // (offset of image start from the first image, length)
    const double ref = ci.image_start(0);
    for (std::size_t k = 0; k < ci.pieces.size(); ++k) {
        if (ci.pieces[k].length <= 0.0) continue;
        double o = forward_offset(ref, ci.image_start(k), C);
        if (C - o < 1e-9) o -= C;
        img.emplace_back(o, ci.pieces[k].length);
    }
    std::sort(img.begin(), img.end());
    for (std::size_t k = 0; k < img.size(); ++k) {
        double end = img[k].first + img[k].second;
        double next = k + 1 < img.size() ? img[k + 1].first : img.front().first + C;
        r.tiling_error = std::fmax(r.tiling_error, std::fabs(next - end));
    }
    const bool three = ci.pieces.size() == 3 && ci.pieces[0].tag == PieceTag::JR &&
                       std::all_of(ci.pieces.begin(), ci.pieces.end(), [](const IemPiece& p) { return p.length > 1e-9; });
    if (three) {
        double mid[3];
        for (int k = 0; k < 3; ++k) {
            const auto& p = ci.pieces[std::size_t(k)];
            mid[k] = forward_offset(ci.apply(ci.pieces[0].lo + 0.5 * ci.pieces[0].length) - 0.5 * ci.pieces[0].length,
                                    ci.apply(p.lo + 0.5 * p.length), C);
        }
        r.order_ok = mid[0] < mid[2] && mid[2] < mid[1];
    }
    return r;
}

/// Largest difference in (theta2_wall, Theta2, chi2) between the closed-form
/// and the quadrature evaluation of the same level set.
inline double closed_form_consistency(const StepConfig& cfg, const LevelSet& ls) {
    auto a = compute_params(cfg, ls);
    auto b = compute_params(cfg.quadrature_only(), ls);
    double d = std::fmax(std::fabs(a.theta2_wall - b.theta2_wall), std::fabs(a.Theta2 - b.Theta2));
    if (a.chi2 && b.chi2 && !a.chi2->infinite && !b.chi2->infinite) d = std::fmax(d, std::fabs(a.chi2->value - b.chi2->value));
    return d;
}

struct SweepRow {
    double e1 = 0.0;
    ReturnMapParams params;
    double lam_JR = 0.0, lam_JK = 0.0, lam_JK1 = 0.0;
    double thetaL_JR = 0.0;
    std::vector<Degeneracy> degeneracies;
    double identity_residual = 0.0;
};

/// Evaluates the return-map quantities on an interior grid of the open step
/// family interval: e1_k = a + (b - a) k / (grid_size + 1), k = 1..grid_size.
inline std::vector<SweepRow> sweep(const StepConfig& cfg, double h, std::size_t grid_size, unsigned workers = 1) {
    if (grid_size < 2) throw DomainError("grid_size must be at least 2");
    auto iv = step_family_interval(cfg, h);
    if (!iv) throw DomainError("h must exceed the step energy");
    const double a = iv->first, b = iv->second;
    std::vector<SweepRow> rows(grid_size);
    parallel_for(grid_size, workers, [&](std::size_t k) {
        SweepRow& r = rows[k];
        r.e1 = a + (b - a) * double(k + 1) / double(grid_size + 1);
        r.params = compute_params(cfg, LevelSet(r.e1, h));
        auto ci = build_step_circle_iem(r.params);
        r.lam_JR = ci.pieces[0].length;
        r.lam_JK = ci.pieces[1].length;
        r.lam_JK1 = ci.pieces[2].length;
        r.thetaL_JR = ci.pieces[0].lo;
        r.degeneracies = ci.degeneracies;
        r.identity_residual = functional_identity_residual(r.params);
    });
    return rows;
}

}  // namespace stepiem
