// stepiem: classify, simulate, build and check return maps of the step system.

#include "stepiem/config.hpp"
#include "stepiem/io.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace stepiem;
namespace cfgns = stepiem::config;

namespace {

enum Exit { ok = 0, failure = 1, config_error = 2, corner_truncation = 3 };

struct Options {
    std::string config_path;
    std::string out = ".";
    std::vector<std::string> sets;
    std::optional<long long> workers, seed;
    bool quadrature_check = false;
};

cfgns::RunConfig load(const Options& o) {
    cfgns::Document doc;
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        if (!in) throw cfgns::ConfigError("cannot read " + o.config_path);
        std::stringstream ss;
        ss << in.rdbuf();
        doc = cfgns::parse(ss.str());
    }
    for (const auto& s : o.sets) cfgns::apply_override(doc, s);
    auto c = cfgns::from_document(doc);
    if (o.workers) c.workers = *o.workers;
    if (o.seed) c.seed = *o.seed;
    if (o.quadrature_check) c.quadrature_check = true;
    cfgns::validate(c);
    return c;
}

unsigned workers_of(const cfgns::RunConfig& c) { return c.workers > 0 ? unsigned(c.workers) : default_workers(); }

std::ofstream open_out(const Options& o, const std::string& name) {
    fs::create_directories(o.out);
    std::ofstream f(fs::path(o.out) / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (fs::path(o.out) / name).string());
    return f;
}

bool both_lo(const cfgns::RunConfig& c) { return c.potential1.kind == "lo" && c.potential2.kind == "lo"; }

int cmd_classify(const Options& o) {
    auto c = load(o);
    auto cfg = cfgns::make_step_config(c);
    std::vector<double> grid = c.h_grid;
    if (grid.empty()) grid.push_back(cfgns::total_energy(c));
    auto segs = energy_momentum_diagram(cfg, grid);
    {
        auto f = open_out(o, "diagram.csv");
        io::write_diagram_csv(f, segs);
    }
    std::printf("h1_step = %.17g, h2_step = %.17g, h_step = %.17g\n", cfg.h_step(0), cfg.h_step(1), cfg.h_step());
    for (double h : grid) {
        std::printf("h = %.17g\n", h);
        for (const auto& s : segs)
            if (s.h == h) std::printf("  %-10s [%.17g, %.17g]\n", s.tag.c_str(), s.e1_lo, s.e1_hi);
        if (!(h > cfg.h_step())) std::printf("  step family empty (h <= h_step)\n");
    }
    if (c.svg) {
        std::vector<io::SvgSeries> ser;
        const char* colours[] = {"#1f4e9c", "#c0392b", "#27ae60", "#7f7f7f"};
        const char* tags[] = {"R1", "Rc", "R2", "disallowed"};
        for (int t = 0; t < 4; ++t) {
            io::SvgSeries lo, hi;
            lo.colour = hi.colour = colours[t];
            for (const auto& s : segs)
                if (s.tag == tags[t]) {
                    lo.x.push_back(s.e1_lo);
                    lo.y.push_back(s.h);
                    hi.x.push_back(s.e1_hi);
                    hi.y.push_back(s.h);
                }
            if (lo.x.empty()) continue;
            lo.dots = hi.dots = grid.size() < 2;
            ser.push_back(lo);
            ser.push_back(hi);
        }
        auto f = open_out(o, "diagram.svg");
        io::write_svg(f, ser, "region boundaries", "e1", "h");
    }
    return ok;
}

int cmd_simulate(const Options& o) {
    auto c = load(o);
    auto cfg = cfgns::make_step_config(c);
    auto ls = cfgns::level_set(c);
    auto rc = classify(cfg, ls);
    if (rc.tag == Region::disallowed) throw cfgns::ConfigError("the level set lies in the disallowed region");
    auto pr = compute_params(cfg, ls);
    std::optional<CircleIem> ci;
    if (pr.region != Region::step_family || (pr.chi2 && !pr.chi2->infinite)) ci = build_circle_iem(pr);

    Simulator sim(cfg, ls, c.theta1_0, c.theta2_0);
    std::vector<io::TrajectoryRow> traj;
    std::vector<io::SectionRow> sec;
    if (c.trajectory) traj.push_back({sim.state(), "Start"});
    std::optional<double> prev_theta2;
    if (sim.angle(0) == 0.0) prev_theta2 = sim.angle(1);
    double t_prev = 0.0, next_sample = c.trajectory_dt;
    bool truncated = false;
    while (sec.size() < std::size_t(c.n_returns)) {
        if (c.trajectory && c.trajectory_dt > 0.0) {
            double dt = sim.next_event_time().second;
            for (; next_sample < sim.state().t + dt; next_sample += c.trajectory_dt) {
                Simulator probe = sim;
                probe.propagate_smooth(next_sample - sim.state().t);
                traj.push_back({probe.state(), "Flow"});
            }
        }
        Event ev = sim.step();
        if (c.trajectory) traj.push_back({ev.state, to_string(ev.kind)});
        if (ev.kind == EventKind::corner_hit) {
            truncated = true;
            break;
        }
        if (ev.kind != EventKind::sigma1_crossing) continue;
        const auto& s = sim.state();
        io::SectionRow row;
        row.k = static_cast<long long>(sec.size()) + 1;
        row.theta2 = sim.chart(1).angle_of(s.q2, s.p2);
        row.return_time = s.t - t_prev;
        if (prev_theta2 && ci) row.interval_tag = to_string(ci->pieces[std::size_t(ci->piece_index(*prev_theta2))].tag);
        sec.push_back(row);
        prev_theta2 = row.theta2;
        t_prev = s.t;
    }
    {
        auto f = open_out(o, "section.csv");
        io::write_section_csv(f, sec);
    }
    if (c.trajectory) {
        auto f = open_out(o, "trajectory.csv");
        io::write_trajectory_csv(f, traj);
    }
    if (c.svg) {
        io::SvgSeries s;
        s.dots = true;
        for (std::size_t k = 1; k < sec.size(); ++k) {
            s.x.push_back(sec[k - 1].theta2);
            s.y.push_back(sec[k].theta2);
        }
        auto f = open_out(o, "section.svg");
        io::write_svg(f, {s}, "return map samples", "theta2(k)", "theta2(k+1)");
        if (c.trajectory) {
            io::SvgSeries path;
            for (const auto& r : traj) {
                path.x.push_back(r.state.q1);
                path.y.push_back(r.state.q2);
            }
            io::SvgSeries wall;
            wall.colour = "#c0392b";
            double lo1 = *std::min_element(path.x.begin(), path.x.end());
            double lo2 = *std::min_element(path.y.begin(), path.y.end());
            wall.x = {lo1, c.q1_wall, c.q1_wall};
            wall.y = {c.q2_wall, c.q2_wall, lo2};
            auto g = open_out(o, "trajectory.svg");
            io::write_svg(g, {path, wall}, "configuration space", "q1", "q2");
        }
    }
    std::printf("region %s, %zu returns written%s\n", to_string(pr.region), sec.size(),
                truncated ? ", truncated by a corner hit" : "");
    return truncated ? corner_truncation : ok;
}

int cmd_iem(const Options& o) {
    auto c = load(o);
    auto cfg = cfgns::make_step_config(c);
    auto ls = cfgns::level_set(c);
    auto pr = compute_params(cfg, ls);
    if (pr.region == Region::step_family && pr.chi2->infinite)
        throw DomainError("chi2 is infinite on this level set; the three-piece map is undefined");
    auto ci = build_circle_iem(pr);
    auto fi = induce_fundamental(ci);
    auto f = open_out(o, "iem.json");
    f << io::iem_json(pr, ci, fi).dump(2) << '\n';
    std::printf("region %s, %d pieces on a circle of length %.17g\n", to_string(pr.region), ci.effective_pieces(),
                ci.circumference);
    for (const auto& p : ci.pieces)
        std::printf("  %-6s lo=% .17g length=%.17g shift=% .17g\n", to_string(p.tag), p.lo, p.length, p.shift);
    return ok;
}

int cmd_sweep(const Options& o) {
    auto c = load(o);
    auto cfg = cfgns::make_step_config(c);
    double h = cfgns::total_energy(c);
    auto rows = sweep(cfg, h, std::size_t(c.grid_size), workers_of(c));
    {
        auto f = open_out(o, "sweep.csv");
        io::write_sweep_csv(f, rows);
    }
    if (c.svg) {
        io::SvgSeries a, b, d;
        b.colour = "#c0392b";
        d.colour = "#27ae60";
        for (const auto& r : rows) {
            a.x.push_back(r.e1);
            b.x.push_back(r.e1);
            d.x.push_back(r.e1);
            a.y.push_back(r.lam_JR);
            b.y.push_back(r.lam_JK);
            d.y.push_back(r.lam_JK1);
        }
        auto f = open_out(o, "sweep.svg");
        io::write_svg(f, {a, b, d}, "interval lengths J_R, J_K, J_K+1", "e1", "length");
    }
    std::printf("%zu rows over e1 in (%.17g, %.17g)\n", rows.size(), cfg.h_step(0), h - cfg.h_step(1));
    return ok;
}

int cmd_verify(const Options& o) {
    auto c = load(o);
    auto cfg = cfgns::make_step_config(c);
    auto ls = cfgns::level_set(c);
    auto pr = compute_params(cfg, ls);
    const bool exact = cfg.potential(0).closed_form() && cfg.potential(1).closed_form();
    const double tol = exact ? 1e-9 : 1e-6;

    ConjugacyOptions opt;
    opt.seed = std::uint64_t(c.seed);
    opt.workers = workers_of(c);
    auto rep = conjugacy_check(cfg, ls, std::size_t(c.n_samples), std::size_t(c.n_iterates), opt);

    nlohmann::ordered_json j;
    j["max_dev_angle"] = rep.max_dev_angle;
    j["max_one_step_dev"] = rep.max_one_step_dev;
    j["max_dev_time"] = rep.max_dev_time;
    j["n_corner_truncations"] = rep.n_corner_truncations;
    j["n_samples"] = rep.n_samples;
    j["n_returns"] = rep.n_returns;
    j["tolerance"] = tol;
    auto& crit = j["criteria"] = nlohmann::ordered_json::object();
    bool all = true;
    auto check = [&](const std::string& name, bool pass, double value) {
        crit[name] = {{"pass", pass}, {"value", value}};
        all = all && pass;
        std::printf("%s %s (%.3g)\n", pass ? "PASS" : "FAIL", name.c_str(), value);
    };
    check("conjugacy_angle", rep.max_dev_angle < tol, rep.max_dev_angle);
    check("return_time", rep.max_dev_time < tol, rep.max_dev_time);
    check("corner_truncations", rep.n_corner_truncations == 0, double(rep.n_corner_truncations));
    if (pr.region != Region::step_family || !pr.chi2->infinite) {
        auto st = iem_structure(build_circle_iem(pr));
        check("piece_lengths_sum", st.length_sum_error < 1e-12, st.length_sum_error);
        check("image_tiling", st.tiling_error < 1e-12, st.tiling_error);
        check("image_order", st.order_ok, st.order_ok ? 0.0 : 1.0);
    }
    if (pr.region == Region::step_family && !pr.chi2->infinite) {
        double r = functional_identity_residual(pr);
        check("functional_identity", r < 1e-10, r);
    }
    if (both_lo(c) && pr.region == Region::step_family) {
        double d = closed_form_consistency(cfgns::make_step_config([&] {
                                               auto x = c;
                                               x.quadrature_check = false;
                                               return x;
                                           }()),
                                           ls);
        check("closed_form_consistency", d < 1e-10, d);
    }
    j["pass"] = all;
    auto f = open_out(o, "verify.json");
    f << j.dump(2) << '\n';
    return all ? ok : failure;
}

int cmd_find_special(const Options& o) {
    auto c = load(o);
    auto cfg = cfgns::make_step_config(c);
    double h = cfgns::total_energy(c);
    SpecialKind kind;
    if (c.special == "chi2-integer")
        kind = SpecialKind::chi2_integer;
    else if (c.special == "theta2-rational")
        kind = SpecialKind::theta2_rational;
    else if (c.special == "degeneracy")
        kind = SpecialKind::degeneracy;
    else
        throw cfgns::ConfigError("special must be chi2-integer, theta2-rational or degeneracy");
    SpecialOptions opt;
    opt.n_max = c.n_max;
    opt.max_hits = std::size_t(c.max_hits);
    auto hits = find_special_level_sets(cfg, h, kind, opt);
    auto f = open_out(o, "special.csv");
    io::write_special_csv(f, hits);
    std::size_t v = std::count_if(hits.begin(), hits.end(), [](const auto& s) { return s.verified; });
    std::printf("%zu %s level sets, %zu verified\n", hits.size(), to_string(kind), v);
    return ok;
}

// ---- tables --------------------------------------------------------------

struct TableLine {
    std::string table, quadrant, quantity, computed, reference, extra;
};

std::string qtext(const ExtendedReal& x) { return io::num(x); }

int cmd_tables(const Options& o) {
    auto c = load(o);
    if (!both_lo(c)) throw cfgns::ConfigError("tables are defined for two linear oscillators");
    LoSystem base{c.potential1.param, c.potential2.param, std::fabs(c.q1_wall), std::fabs(c.q2_wall)};
    std::vector<TableLine> lines;
    const int signs[4][2] = {{-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
    std::vector<LoSystem> quads;
    for (auto& sg : signs) quads.push_back({base.omega1, base.omega2, sg[0] * base.q1_wall, sg[1] * base.q2_wall});
    const double h = c.h.value_or(2.0 * base.h_step());
    if (!(h > base.h_step())) throw cfgns::ConfigError("tables need h above the step energy");
    for (const auto& s : quads) {
        auto t = edge_table(s, h);
        auto add = [&](const char* tab, const char* q, double got, double ref) {
            lines.push_back({tab, t.quadrant, q, io::num(got), io::num(ref), io::num(std::fabs(got - ref))});
        };
        auto addx = [&](const char* tab, const char* q, const ExtendedReal& got, const ExtendedReal& ref) {
            std::string diff = got.infinite || ref.infinite ? (got.infinite == ref.infinite ? "0" : "inf")
                                                            : io::num(std::fabs(got.value - ref.value));
            lines.push_back({tab, t.quadrant, q, qtext(got), qtext(ref), diff});
        };
        add("wall_angles", "theta1_wall(h1_step)", t.th1_lower, t.th1_lower_tab);
        add("wall_angles", "theta2_wall(h1_step)", t.th2_lower, t.th2_lower_tab);
        add("wall_angles", "theta1_wall(h-h2_step)", t.th1_upper, t.th1_upper_tab);
        add("wall_angles", "theta2_wall(h-h2_step)", t.th2_upper, t.th2_upper_tab);
        addx("edges_general", "chi2(h1_step)", t.chi_lower, t.chi_lower_general);
        addx("edges_general", "chi2(h-h2_step)", t.chi_upper, t.chi_upper_general);
        add("edges_general", "Theta2(h1_step)", t.Theta_lower, t.Theta_lower_general);
        add("edges_general", "Theta2(h-h2_step)", t.Theta_upper, t.Theta_upper_general);
        addx("edges_lo", "chi2(h1_step)", t.chi_lower, t.chi_lower_tab);
        addx("edges_lo", "chi2(h-h2_step)", t.chi_upper, t.chi_upper_tab);
        add("edges_lo", "Theta2(h1_step)", t.Theta_lower, t.Theta_lower_tab);
        add("edges_lo", "Theta2(h-h2_step)", t.Theta_upper, t.Theta_upper_tab);
        lines.push_back({"edges_lo", t.quadrant, "chi2_shape", t.chi_mark, t.chi_mark_tab, t.chi_mark == t.chi_mark_tab ? "0" : "1"});
        lines.push_back(
            {"edges_lo", t.quadrant, "Theta2_shape", t.Theta_mark, t.Theta_mark_tab, t.Theta_mark == t.Theta_mark_tab ? "0" : "1"});
    }
    for (const auto& s : quads) {
        auto row = large_energy_row(s);
        const double hl = 100.0 * s.h_step();
        auto lim = edge_table(s, hl * 1e6);
        lines.push_back({"large_energy", row.quadrant, "chi2(h1_step) at 1e8 h_step", io::num(lim.chi_lower), io::num(row.chi_lower), ""});
        lines.push_back({"large_energy", row.quadrant, "chi2(h-h2_step) at 1e8 h_step", qtext(lim.chi_upper), qtext(row.chi_upper), ""});
        lines.push_back({"large_energy", row.quadrant, "Theta2(h1_step) at 1e8 h_step", io::num(lim.Theta_lower), io::num(row.Theta_lower), ""});
        lines.push_back({"large_energy", row.quadrant, "Theta2(h-h2_step) at 1e8 h_step", io::num(lim.Theta_upper), io::num(row.Theta_upper), ""});
        for (Section sec : {Section::sigma2, Section::sigma1}) {
            auto cc = count_chi2_integer_crossings(s, hl, sec);
            auto bound = sec == Section::sigma2 ? row.n_osc2_bound : row.n_osc1_bound;
            bool lower = sec == Section::sigma2 ? row.n_osc2_is_lower_bound : row.n_osc1_is_lower_bound;
            std::string ref = bound ? (lower ? ">= " : "") + std::to_string(*bound) : "inf";
            std::string got = cc.infinite ? "inf (" + std::to_string(cc.count()) + " located)" : std::to_string(cc.count());
            lines.push_back({"large_energy", row.quadrant, sec == Section::sigma2 ? "N_osc2 at 100 h_step" : "N_osc1 at 100 h_step",
                             got, ref, ""});
        }
    }
    std::vector<double> etas = c.eta;
    if (etas.empty()) etas = {1e-3 * base.h_step(), 1e-4 * base.h_step()};
    for (const auto& s : quads)
        for (double eta : etas) {
            auto row = near_threshold_table(s, eta);
            for (const auto& e : row.entries)
                lines.push_back({"near_threshold", row.quadrant, e.name + " eta=" + io::num(eta), qtext(e.computed), qtext(e.asymptotic),
                                 io::num(e.ratio)});
        }

    const std::vector<std::string> order = {"wall_angles", "edges_general", "edges_lo", "large_energy", "near_threshold"};
    auto rank = [&](const std::string& t) { return std::find(order.begin(), order.end(), t) - order.begin(); };
    std::stable_sort(lines.begin(), lines.end(), [&](const auto& a, const auto& b) { return rank(a.table) < rank(b.table); });
    {
        auto f = open_out(o, "tables.csv");
        f << "table,quadrant,quantity,computed,reference,extra\n";
        for (const auto& l : lines)
            f << l.table << ',' << l.quadrant << ',' << l.quantity << ',' << l.computed << ',' << l.reference << ','
              << l.extra << '\n';
    }
    auto f = open_out(o, "tables.txt");
    const std::map<std::string, const char*> heads = {
        {"wall_angles", "wall angles at the edges of the step family"},
        {"edges_general", "chi2 and Theta2 at the edges (general form)"},
        {"edges_lo", "chi2 and Theta2 at the edges (linear oscillators)"},
        {"large_energy", "large-energy limits and oscillation counts"},
        {"near_threshold", "edges at h = h_step + eta (extra = correction ratio)"}};
    char buf[512];
    std::snprintf(buf, sizeof buf, "omega1 = %.17g, omega2 = %.17g, |q1_wall| = %.17g, |q2_wall| = %.17g, h = %.17g\n",
                  base.omega1, base.omega2, base.q1_wall, base.q2_wall, h);
    f << buf;
    std::string cur;
    for (const auto& l : lines) {
        if (l.table != cur) {
            cur = l.table;
            f << '\n' << heads.at(cur) << '\n';
            std::snprintf(buf, sizeof buf, "  %-7s %-34s %-26s %-26s %s\n", "quad", "quantity", "computed", "reference",
                          "extra");
            f << buf;
        }
        std::snprintf(buf, sizeof buf, "  %-7s %-34s %-26s %-26s %s\n", l.quadrant.c_str(), l.quantity.c_str(),
                      l.computed.c_str(), l.reference.c_str(), l.extra.c_str());
        f << buf;
    }
    std::printf("%zu table entries written\n", lines.size());
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Step system: impact flow, return maps and interval exchanges"};
    app.require_subcommand(1);
    Options o;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "run configuration file")->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--workers", o.workers, "worker threads (default: available parallelism)");
        sub->add_option("--seed", o.seed, "seed for sample-phase selection");
        sub->add_flag("--quadrature-check", o.quadrature_check, "use the quadrature path for linear oscillators");
        sub->add_option("--set", o.sets, "override a config entry, key=value (repeatable)");
    };
    struct Cmd {
        const char* name;
        const char* help;
        int (*fn)(const Options&);
    };
    const Cmd cmds[] = {
        {"classify", "region boundaries of the energy-momentum diagram", cmd_classify},
        {"simulate", "simulate the flow and record returns to Sigma_1", cmd_simulate},
        {"iem", "build the return map of one level set", cmd_iem},
        {"sweep", "return-map quantities along the step family", cmd_sweep},
        {"verify", "flow versus map and structural checks on one level set", cmd_verify},
        {"find-special", "locate chi2-integer, rational or degenerate level sets", cmd_find_special},
        {"tables", "edge tables for two linear oscillators", cmd_tables},
    };
    int (*chosen)(const Options&) = nullptr;
    for (const auto& c : cmds) {
        auto* sub = app.add_subcommand(c.name, c.help);
        common(sub);
        auto fn = c.fn;
        sub->callback([&chosen, fn] { chosen = fn; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : config_error;
    }
    try {
        return chosen(o);
    } catch (const cfgns::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return failure;
    }
}
