// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "support.hpp"

#include "stepiem/diagnostics.hpp"
#include "stepiem/io.hpp"

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

using namespace stepiem;
using testing_support::random_lo;
using testing_support::random_step_level;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

const int kSigns[4][2] = {{-1, -1}, {-1, 1}, {1, -1}, {1, 1}};

StepConfig lo_config(double q1w, double q2w, double w1, double w2) {
    return StepConfig(Potential1D::linear_oscillator(w1), Potential1D::linear_oscillator(w2), q1w, q2w);
}

// 1 -------------------------------------------------------------------------
Outcome closed_form_spine() {
    auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        auto s = random_lo(rng, kSigns[k % 4][0], kSigns[k % 4][1]);
        auto [e1, h] = random_step_level(rng, s.h1_step(), s.h2_step());
        auto a = lo_params(s, e1, h);
        auto b = compute_params(s.step_config().quadrature_only(), LevelSet(e1, h));
        worst = std::fmax(worst, std::fabs(a.theta2_wall - b.theta2_wall));
        worst = std::fmax(worst, std::fabs(a.Theta2 - b.Theta2) / std::fmax(1.0, std::fabs(a.Theta2)));
        worst = std::fmax(worst, std::fabs(a.chi2->get() - b.chi2->get()) / std::fmax(1.0, std::fabs(a.chi2->get())));
    }
    double t = seconds_since(t0);
    return {worst < 1e-10 && t < 30.0, fmt("max diff %.2e over 1000 configs, %.1f s", worst, t)};
}

// 2 -------------------------------------------------------------------------
Outcome functional_identity(unsigned workers) {
    double worst = 0.0;
    std::size_t rows = 0;
    std::mt19937_64 rng(202);
    for (int k = 0; k < 8; ++k) {
        auto s = random_lo(rng, kSigns[k % 4][0], kSigns[k % 4][1]);
        for (const auto& r : sweep(s.step_config(), 3.0 * s.h_step(), 500, workers)) {
            worst = std::fmax(worst, r.identity_residual);
            ++rows;
        }
    }
    for (auto [q1, q2] : {std::pair{-0.6, 0.4}, std::pair{0.5, -0.3}, std::pair{0.4, 0.7}, std::pair{-0.5, -0.5}}) {
        StepConfig cfg(Potential1D::quartic(1.0), Potential1D::quartic(2.3), q1, q2);
        for (const auto& r : sweep(cfg, 2.5 * cfg.h_step(), 200, workers)) {
            worst = std::fmax(worst, r.identity_residual);
            ++rows;
        }
    }
    return {worst < 1e-10, fmt("max residual %.2e over %zu sweep rows (LO and quartic)", worst, rows)};
}

// 3 -------------------------------------------------------------------------
Outcome conjugacy(unsigned workers) {
    auto t0 = Clock::now();
    std::mt19937_64 rng(303);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double lo_angle = 0.0, lo_time = 0.0, q_angle = 0.0, q_time = 0.0;
    std::size_t truncated = 0, resyncs = 0, returns = 0;
    for (int k = 0; k < 50; ++k) {
        const bool quartic = k % 2 == 1;
        const int* sg = kSigns[(k / 2) % 4];
        StepConfig cfg = quartic ? StepConfig(Potential1D::quartic(0.5 + 2.0 * u(rng)), Potential1D::quartic(0.5 + 2.0 * u(rng)),
                                              sg[0] * (0.2 + 0.8 * u(rng)), sg[1] * (0.2 + 0.8 * u(rng)))
                                 : random_lo(rng, sg[0], sg[1]).step_config();
        auto [e1, h] = random_step_level(rng, cfg.h_step(0), cfg.h_step(1));
        ConjugacyOptions opt;
        opt.seed = 1000 + std::uint64_t(k);
        opt.workers = workers;
        auto rep = conjugacy_check(cfg, LevelSet(e1, h), 200, 500, opt);
        (quartic ? q_angle : lo_angle) = std::fmax(quartic ? q_angle : lo_angle, rep.max_dev_angle);
        (quartic ? q_time : lo_time) = std::fmax(quartic ? q_time : lo_time, rep.max_dev_time);
        truncated += rep.n_corner_truncations;
        resyncs += rep.n_resyncs;
        returns += rep.n_returns;
    }
    double t = seconds_since(t0);
    bool ok = lo_angle < 1e-9 && lo_time < 1e-9 && q_angle < 1e-6 && q_time < 1e-6 && t < 300.0;
    return {ok, fmt("LO angle %.2e time %.2e; quartic angle %.2e time %.2e; %zu returns, %zu resyncs, "
                    "%zu corner truncations, %.1f s",
                    lo_angle, lo_time, q_angle, q_time, returns, resyncs, truncated, t)};
}

// 4 -------------------------------------------------------------------------
Outcome structure() {
    std::mt19937_64 rng(404);
    double sum_err = 0.0, tile_err = 0.0;
    std::size_t bad_order = 0, checked = 0;
    for (int k = 0; k < 10000; ++k) {
        auto s = random_lo(rng, kSigns[k % 4][0], kSigns[k % 4][1]);
        auto [e1, h] = random_step_level(rng, s.h1_step(), s.h2_step());
        auto ci = build_step_circle_iem(compute_params(s.step_config(), LevelSet(e1, h)));
        auto st = iem_structure(ci);
        sum_err = std::fmax(sum_err, st.length_sum_error);
        tile_err = std::fmax(tile_err, st.tiling_error);
        if (ci.effective_pieces() == 3) {
            ++checked;
            bad_order += !st.order_ok;
        }
    }
    return {sum_err < 1e-12 && tile_err < 1e-12 && bad_order == 0,
            fmt("length sum %.2e, tiling %.2e, order violations %zu of %zu", sum_err, tile_err, bad_order, checked)};
}

// 5 -------------------------------------------------------------------------
Outcome region_partition() {
    std::size_t endpoint_errors = 0, violations = 0, level_sets = 0, truncated = 0;
    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const auto& sg : kSigns) {
        auto cfg = lo_config(0.5 * sg[0], 0.4 * sg[1], 1.0, 1.37);
        const double h1 = cfg.h_step(0), h2 = cfg.h_step(1), hs = cfg.h_step();
        std::vector<double> hs_grid;
        for (int k = 0; k < 100; ++k) hs_grid.push_back(hs * std::pow(10.0, -2.0 + 4.0 * (k + 0.5) / 100.0));
        for (const auto& seg : energy_momentum_diagram(cfg, hs_grid)) {
            const double h = seg.h;
            bool ok = true;
            if (seg.tag == "Rc") ok = h > hs && seg.e1_lo == h1 && seg.e1_hi == h - h2;
            if (seg.tag == "R1") ok = seg.e1_lo == 0.0 && seg.e1_hi == (h > h1 ? h1 : h);
            if (seg.tag == "R2") ok = seg.e1_hi == h && seg.e1_lo == (h > h2 ? h - h2 : 0.0);
            endpoint_errors += !ok;
        }
        std::map<Region, int> per_region;
        for (int draw = 0; draw < 400; ++draw) {
            double e1 = h1 * (u(rng) < 0.5 ? 0.05 + 0.9 * u(rng) : 1.05 + 3.0 * u(rng));
            double e2 = h2 * (u(rng) < 0.5 ? 0.05 + 0.9 * u(rng) : 1.05 + 3.0 * u(rng));
            auto ls = LevelSet::from_energies(e1, e2);
            Region tag = classify(cfg, ls).tag;
            if (tag == Region::disallowed || per_region[tag] >= 10) continue;
            ++per_region[tag];
            ++level_sets;
            // redraw phases that put the start inside the step
            std::optional<Simulator> start;
            while (!start) {
                try {
                    start.emplace(cfg, ls, -pi + two_pi * u(rng), -pi + two_pi * u(rng));
                } catch (const DomainError&) {
                }
            }
            Simulator& sim = *start;
            for (int n = 0; n < 10000; ++n) {
                auto ev = sim.step();
                if (ev.kind == EventKind::corner_hit) {
                    ++truncated;
                    break;
                }
                bool w1 = ev.kind == EventKind::wall1_impact, w2 = ev.kind == EventKind::wall2_impact;
                bool allowed = tag == Region::step_family || (tag == Region::only_wall1_impacts && !w2) ||
                               (tag == Region::only_wall2_impacts && !w1) || (tag == Region::no_impacts && !w1 && !w2);
                const auto& s = sim.state();
                bool inside = s.q1 < cfg.q_wall(0) - 1e-12 && s.q2 < cfg.q_wall(1) - 1e-12;
                violations += !allowed || inside;
            }
        }
    }
    return {endpoint_errors == 0 && violations == 0,
            fmt("%zu endpoint mismatches over 400 energies; %zu violations over %zu level sets x 1e4 events "
                "(%zu corner truncations)",
                endpoint_errors, violations, level_sets, truncated)};
}

// 6 -------------------------------------------------------------------------
Outcome edge_tables() {
    double worst = 0.0;
    std::size_t mark_mismatches = 0, rows = 0;
    double worst_ratio = 0.0;
    for (const auto& sg : kSigns) {
        for (double r : {0.6, 1.0, 2.0, 3.7}) {
            LoSystem s{1.0, r, 0.5 * sg[0], 0.4 * sg[1]};
            for (double f : {1.2, 2.0, 10.0, 100.0}) {
                auto t = edge_table(s, f * s.h_step());
                ++rows;
                for (auto [a, b] : {std::pair{t.th1_lower, t.th1_lower_tab}, std::pair{t.th2_lower, t.th2_lower_tab},
                                    std::pair{t.th1_upper, t.th1_upper_tab}, std::pair{t.th2_upper, t.th2_upper_tab},
                                    std::pair{t.chi_lower.get(), t.chi_lower_tab.get()},
                                    std::pair{t.Theta_lower, t.Theta_lower_tab},
                                    std::pair{t.Theta_upper, t.Theta_upper_tab}})
                    worst = std::fmax(worst, std::fabs(a - b));
                if (t.chi_upper.infinite != t.chi_upper_tab.infinite)
                    worst = INFINITY;
                else if (!t.chi_upper.infinite)
                    worst = std::fmax(worst, std::fabs(t.chi_upper.get() - t.chi_upper_tab.get()));
                mark_mismatches += (t.chi_mark != t.chi_mark_tab) + (t.Theta_mark != t.Theta_mark_tab);
            }
            for (double rel : {1e-4, 1e-5, 1e-6}) {
                auto row = near_threshold_table(s, rel * s.h_step());
                for (const auto& e : row.entries)
                    if (!e.computed.infinite) worst_ratio = std::fmax(worst_ratio, std::fabs(e.ratio - 1.0));
            }
        }
    }
    return {worst < 1e-10 && mark_mismatches == 0 && worst_ratio < 0.1,
            fmt("%zu edge rows: max diff %.2e, %zu mark mismatches; near-threshold max |ratio-1| %.3f", rows, worst,
                mark_mismatches, worst_ratio)};
}

// 7 -------------------------------------------------------------------------
Outcome rotation_reduction() {
    auto cfg = lo_config(-0.5, 0.5, 1.0, 2.0);
    const double h = 2.5;
    SpecialOptions opt;
    opt.max_hits = 8;
    auto hits = find_special_level_sets(cfg, h, SpecialKind::chi2_integer, opt);
    std::size_t not_two = 0;
    double worst = 0.0;
    for (const auto& hit : hits) {
        auto ci = build_step_circle_iem(hit.params);
        not_two += ci.effective_pieces() != 2;
        for (int j = 0; j < 20; ++j) {
            double th0 = -pi + two_pi * (j + 0.5) / 20.0;
            auto run = return_map_samples(cfg, LevelSet(hit.e1, h), th0, 100);
            double x = th0;
            for (const auto& smp : run.samples) {
                x = wrap_angle(x + hit.params.Theta2);
                worst = std::fmax(worst, circle_distance(smp.theta2, x));
            }
        }
    }
    return {hits.size() >= 5 && not_two == 0 && worst < 1e-9,
            fmt("%zu level sets, %zu without 2 effective pieces, max deviation from rotation %.2e", hits.size(), not_two,
                worst)};
}

// 8 -------------------------------------------------------------------------
Outcome resonant_band() {
    // Theta2 = 2 pi / 3 fixes e1; then q2_wall is tuned until {chi2} = 1/2
    const double w1 = 1.0, w2 = 1.0, q1w = 0.5, h = 3.0;
    auto params = [&](double q2w, double e1) { return compute_params(lo_config(q1w, q2w, w1, w2), LevelSet(e1, h)); };
    const double q2_probe = 1.2;
    auto iv = *step_family_interval(lo_config(q1w, q2_probe, w1, w2), h);
    double e1 = solve_bracketed([&](double e) { return params(q2_probe, e).Theta2 - two_pi / 3.0; }, iv.first * (1 + 1e-12),
                                iv.second * (1 - 1e-12));
    const double e2 = h - e1;
    // 2 theta2_wall < 2 pi / 3 requires omega2 q2_wall > sqrt(2 e2) / 2
    double q_lo = std::sqrt(2.0 * e2) / (2.0 * w2) * (1.0 + 1e-9), q_hi = std::sqrt(2.0 * e2) / w2 * (1.0 - 1e-9);
    double chi_lo = params(q_lo, e1).chi2->get();
    double target = std::floor(chi_lo) + 0.5 + (chi_lo - std::floor(chi_lo) >= 0.5 ? 1.0 : 0.0);
    double q2w = solve_bracketed([&](double q) { return params(q, e1).chi2->get() - target; }, q_lo, q_hi);
    auto pr = params(q2w, e1);
    auto ci = build_step_circle_iem(pr);
    std::size_t in_I = 0, ok_I = 0, outside = 0, ok_out = 0;
    for (int k = 0; k < 600; ++k) {
        double x = -pi + two_pi * (k + 0.37) / 600.0;
        if (distance_to_cut(ci, x) < 1e-6) continue;
        bool stays = true;
        double y = x;
        for (int j = 0; j < 3 && stays; ++j) {
            stays = ci.pieces[std::size_t(ci.piece_index(y))].tag == PieceTag::JR;
            y = ci.apply(y);
        }
        auto v = classify_orbit(ci, x, 100);
        if (stays) {
            ++in_I;
            ok_I += v.periodic && v.period == 3;
        } else {
            ++outside;
            ok_out += v.periodic && v.period == 6;
        }
    }
    bool ok = std::fabs(pr.Theta2 - two_pi / 3.0) < 1e-12 && 2.0 * pr.theta2_wall < two_pi / 3.0 &&
              std::fabs(pr.chi2_frac() - 0.5) < 1e-12 && in_I >= 20 && ok_I == in_I && outside > 0 && ok_out == outside;
    return {ok, fmt("q2_wall=%.12g e1=%.12g chi2=%.12g: %zu/%zu points in I are 3-periodic, %zu/%zu outside are "
                    "6-periodic",
                    q2w, e1, pr.chi2->get(), ok_I, in_I, ok_out, outside)};
}

// 9 -------------------------------------------------------------------------
Outcome oscillation_counts() {
    bool ok = true;
    std::string detail;
    for (double r : {2.0, 3.0, 5.0}) {
        LoSystem pm{1.0, r, 0.5, -0.5}, mm{1.0, r, -0.5, -0.5};
        long long n_pm = count_chi2_integer_crossings(pm, 100.0 * pm.h_step()).count();
        long long n_mm = count_chi2_integer_crossings(mm, 100.0 * mm.h_step()).count();
        long long want_pm = static_cast<long long>(std::floor(1.5 * r));
        long long want_mm = static_cast<long long>(std::floor(0.5 * r));
        ok = ok && n_pm == want_pm && n_mm >= want_mm;
        detail += fmt("%sr=%g (+,-) %lld vs %lld%s, (-,-) %lld >= %lld%s", detail.empty() ? "" : "; ", r, n_pm,
                      want_pm, n_pm == want_pm ? "" : " MISMATCH", n_mm, want_mm, n_mm >= want_mm ? "" : " MISMATCH");
    }
    return {ok, detail};
}

// 10 ------------------------------------------------------------------------
std::string artefacts(unsigned workers) {
    std::ostringstream os;
    auto cfg = lo_config(-0.5, 0.5, 1.0, 2.0);
    io::write_sweep_csv(os, sweep(cfg, 2.5, 300, workers));
    SpecialOptions opt;
    opt.max_hits = 5;
    io::write_special_csv(os, find_special_level_sets(cfg, 2.5, SpecialKind::chi2_integer, opt));
    auto pr = compute_params(cfg, LevelSet(1.0, 2.5));
    auto ci = build_step_circle_iem(pr);
    os << io::iem_json(pr, ci, induce_fundamental(ci)).dump(2);
    ConjugacyOptions co;
    co.workers = workers;
    auto rep = conjugacy_check(cfg, LevelSet(1.0, 2.5), 30, 50, co);
    os << io::num(rep.max_dev_angle) << io::num(rep.max_dev_time);
    for (double x : rep.initial_phases) os << io::num(x);
    for (const auto& s : return_map_samples(cfg, LevelSet(1.0, 2.5), 0.3, 200).samples)
        os << io::num(s.theta2) << ',' << io::num(s.return_time) << '\n';
    return os.str();
}

Outcome reproducibility(unsigned workers) {
    auto a = artefacts(workers), b = artefacts(workers), c = artefacts(1);
    return {a == b && a == c, fmt("%zu bytes; repeat %s, single worker %s", a.size(), a == b ? "identical" : "differs",
                                  a == c ? "identical" : "differs")};
}

}  // namespace

int main() {
    const unsigned workers = default_workers();
    std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"closed forms vs quadrature", closed_form_spine},
        {"functional identity on sweeps", [&] { return functional_identity(workers); }},
        {"flow/map conjugacy", [&] { return conjugacy(workers); }},
        {"map structure", structure},
        {"region partition", region_partition},
        {"edge tables", edge_tables},
        {"rotation reduction", rotation_reduction},
        {"resonant band", resonant_band},
        {"oscillation counts", oscillation_counts},
        {"reproducibility", [&] { return reproducibility(workers); }},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed ? 1 : 0;
}
