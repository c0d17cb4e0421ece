#pragma once

// CSV, JSON and SVG emission. Floats are written with 17 significant digits
// so identical inputs give byte-identical files.

#include "diagnostics.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace stepiem::io {

inline std::string num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string num(const ExtendedReal& x) { return x.infinite ? "inf" : num(x.value); }

inline std::string join_tags(const std::vector<Degeneracy>& ds) {
    std::string out;
    for (const auto& d : ds) out += (out.empty() ? "" : ";") + d.tag();
    return out;
}

inline void write_diagram_csv(std::ostream& os, const std::vector<DiagramSegment>& segs) {
    os << "h,seg_tag,e1_lo,e1_hi\n";
    for (const auto& s : segs) os << num(s.h) << ',' << s.tag << ',' << num(s.e1_lo) << ',' << num(s.e1_hi) << '\n';
}

struct TrajectoryRow {
    ImpactState state;
    std::string kind;  ///< event name, "Start" or "Flow"
};

inline void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryRow>& rows) {
    os << "t,q1,q2,p1,p2,event_kind\n";
    for (const auto& r : rows)
        os << num(r.state.t) << ',' << num(r.state.q1) << ',' << num(r.state.q2) << ',' << num(r.state.p1) << ','
           << num(r.state.p2) << ',' << r.kind << '\n';
}

struct SectionRow {
    long long k = 0;
    double theta2 = 0.0;
    double return_time = 0.0;
    std::string interval_tag;  ///< map piece that contained the phase the return started from
};

inline void write_section_csv(std::ostream& os, const std::vector<SectionRow>& rows) {
    os << "k,theta2,return_time,interval_tag\n";
    for (const auto& r : rows) os << r.k << ',' << num(r.theta2) << ',' << num(r.return_time) << ',' << r.interval_tag << '\n';
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "e1,theta2_wall,Theta2,chi2,K2,lam_JR,lam_JK,lam_JK1,thetaL_JR,deg_flags\n";
    for (const auto& r : rows) {
        os << num(r.e1) << ',' << num(r.params.theta2_wall) << ',' << num(r.params.Theta2) << ','
           << num(*r.params.chi2) << ',' << (r.params.K2 ? std::to_string(*r.params.K2) : "") << ',' << num(r.lam_JR)
           << ',' << num(r.lam_JK) << ',' << num(r.lam_JK1) << ',' << num(r.thetaL_JR) << ',' << join_tags(r.degeneracies)
           << '\n';
    }
}

inline void write_special_csv(std::ostream& os, const std::vector<SpecialLevelSet>& hits) {
    os << "e1,condition,Theta2,chi2,verified,certificate\n";
    for (const auto& s : hits)
        os << num(s.e1) << ',' << s.condition << ',' << num(s.params.Theta2) << ',' << num(*s.params.chi2) << ','
           << (s.verified ? "true" : "false") << ',' << s.certificate << '\n';
}

inline nlohmann::ordered_json params_json(const ReturnMapParams& pr) {
    nlohmann::ordered_json j;
    j["region"] = to_string(pr.region);
    j["boundary"] = pr.boundary;
    j["e1"] = pr.e1;
    j["h"] = pr.h;
    j["T1"] = pr.T1;
    j["T2"] = pr.T2;
    j["T1_tilde"] = pr.T1_tilde;
    j["T2_tilde"] = pr.T2_tilde;
    j["theta1_hat"] = pr.theta1_hat;
    j["theta2_wall"] = pr.theta2_wall;
    j["Theta2_smooth"] = pr.Theta2_smooth;
    j["Theta2"] = pr.Theta2;
    j["Theta2_star"] = pr.Theta2_star;
    if (pr.chi2) j["chi2"] = pr.chi2->infinite ? nlohmann::ordered_json("inf") : nlohmann::ordered_json(pr.chi2->value);
    if (pr.K2) j["K2"] = *pr.K2;
    return j;
}

inline nlohmann::ordered_json iem_json(const ReturnMapParams& pr, const CircleIem& ci, const FundamentalIem& fi) {
    nlohmann::ordered_json j;
    j["params"] = params_json(pr);
    j["circumference"] = ci.circumference;
    j["base"] = ci.base;
    auto& pieces = j["pieces"] = nlohmann::ordered_json::array();
    for (const auto& p : ci.pieces)
        pieces.push_back({{"tag", to_string(p.tag)}, {"lo", p.lo}, {"hi", p.lo + p.length}, {"length", p.length},
                          {"shift", p.shift}});
    j["permutation"] = ci.permutation;
    auto& deg = j["degeneracies"] = nlohmann::ordered_json::array();
    for (const auto& d : ci.degeneracies) deg.push_back({{"tag", d.tag()}, {"residual", d.residual}});
    j["reduces_to_rotation"] = ci.reduces_to_rotation;
    j["effective_pieces"] = ci.effective_pieces();
    if (ci.rational_rotation)
        j["rational_rotation"] = {ci.rational_rotation->first, ci.rational_rotation->second};
    auto& f = j["fundamental"];
    f["base"] = fi.base;
    f["length"] = fi.length;
    if (fi.cut_preimage) f["cut_preimage"] = *fi.cut_preimage;
    f["coincident_cuts"] = fi.coincident_cuts;
    f["degenerate"] = fi.degenerate;
    auto& ivs = f["intervals"] = nlohmann::ordered_json::array();
    for (const auto& iv : fi.intervals)
        ivs.push_back({{"tag", to_string(iv.tag)}, {"lo", iv.lo}, {"hi", iv.hi}, {"shift", iv.shift}});
    return j;
}

/// Minimal line plot. Each series is drawn as a polyline or as dots.
struct SvgSeries {
    std::vector<double> x, y;
    std::string colour = "#1f4e9c";
    bool dots = false;
};

inline void write_svg(std::ostream& os, const std::vector<SvgSeries>& series, const std::string& title,
                      const std::string& xlabel, const std::string& ylabel) {
    const double W = 640, H = 480, L = 70, R = 20, T = 40, B = 60;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
            x0 = std::fmin(x0, s.x[k]);
            x1 = std::fmax(x1, s.x[k]);
            y0 = std::fmin(y0, s.y[k]);
            y1 = std::fmax(y1, s.y[k]);
        }
    if (!(x1 > x0)) x1 = x0 + 1.0;
    if (!(y1 > y0)) y1 = y0 + 1.0;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
    char buf[128];
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"640\" height=\"480\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n", L,
                  T, W - L - R, H - T - B);
    os << buf;
    os << "<text x=\"320\" y=\"24\" text-anchor=\"middle\">" << title << "</text>\n";
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
    os << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
       << (T + H - B) / 2 << ")\">" << ylabel << "</text>\n";
    for (int k = 0; k <= 4; ++k) {
        double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%.4g</text>\n", px(xv), H - B + 16, xv);
        os << buf;
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.4g</text>\n", L - 4, py(yv) + 4, yv);
        os << buf;
    }
    for (const auto& s : series) {
        if (s.dots) {
            for (std::size_t k = 0; k < s.x.size(); ++k) {
                if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
                std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"1.2\" fill=\"", px(s.x[k]), py(s.y[k]));
                os << buf << s.colour << "\"/>\n";
            }
            continue;
        }
        os << "<polyline fill=\"none\" stroke=\"" << s.colour << "\" points=\"";
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(s.x[k]), py(s.y[k]));
            os << buf;
        }
        os << "\"/>\n";
    }
    os << "</svg>\n";
}

}  // namespace stepiem::io
