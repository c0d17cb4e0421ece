#pragma once

#include "potentials.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace stepiem {

enum class Region { step_family, only_wall1_impacts, only_wall2_impacts, no_impacts, disallowed };

inline const char* to_string(Region r) {
    switch (r) {
        case Region::step_family: return "StepFamily";
        case Region::only_wall1_impacts: return "OnlyWall1Impacts";
        case Region::only_wall2_impacts: return "OnlyWall2Impacts";
        case Region::no_impacts: return "NoImpacts";
        case Region::disallowed: return "Disallowed";
    }
    return "?";
}

/// Two oscillators and the step {q1 < q1_wall, q2 < q2_wall}.
class StepConfig {
public:
    StepConfig(Potential1D v1, Potential1D v2, double q1_wall, double q2_wall)
        : v_{std::move(v1), std::move(v2)}, q_wall_{q1_wall, q2_wall} {
        if (!std::isfinite(q1_wall) || !std::isfinite(q2_wall) || q1_wall * q2_wall == 0.0)
            throw DomainError("wall positions must satisfy q1_wall * q2_wall != 0");
        for (int i = 0; i < 2; ++i) {
            double r = 2.0 * std::fabs(q_wall_[i]);
            v_[i].check_shape(-r, r);
            h_step_[i] = v_[i].value(q_wall_[i]);
        }
    }

    const Potential1D& potential(int i) const { return v_[i]; }
    double q_wall(int i) const { return q_wall_[i]; }
    double h_step(int i) const { return h_step_[i]; }
    double h_step() const { return h_step_[0] + h_step_[1]; }

    StepConfig quadrature_only() const {
        return StepConfig(v_[0].quadrature_only(), v_[1].quadrature_only(), q_wall_[0], q_wall_[1]);
    }

    /// The same system with the two degrees of freedom exchanged.
    StepConfig swapped() const { return StepConfig(v_[1], v_[0], q_wall_[1], q_wall_[0]); }

private:
    Potential1D v_[2];
    double q_wall_[2];
    double h_step_[2] = {0.0, 0.0};
};

struct LevelSet {
    double e1 = 0.0;
    double h = 0.0;

    LevelSet() = default;
    LevelSet(double e1_, double h_) : e1(e1_), h(h_) {
        if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("total energy h must be positive");
        if (!(e1 >= 0.0 && e1 <= h)) throw DomainError("e1 must lie in [0, h]");
    }

    static LevelSet from_energies(double e1, double e2) { return LevelSet(e1, e1 + e2); }

    double e2() const { return h - e1; }
    double energy(int i) const { return i == 0 ? e1 : e2(); }
};

struct RegionClass {
    Region tag = Region::disallowed;
    bool boundary = false;  ///< some e_i equals its step energy
    std::optional<double> theta1_hat;
    std::optional<double> theta2_hat;

    std::optional<double> theta_hat(int i) const { return i == 0 ? theta1_hat : theta2_hat; }
};

inline RegionClass classify(const StepConfig& cfg, const LevelSet& ls) {
    RegionClass rc;
    double e[2] = {ls.e1, ls.e2()};
    bool below[2], reach[2];
    for (int i = 0; i < 2; ++i) {
        below[i] = e[i] < cfg.h_step(i);
        reach[i] = !below[i];
        if (e[i] == cfg.h_step(i)) rc.boundary = true;
    }
    if (cfg.q_wall(0) > 0.0 && cfg.q_wall(1) > 0.0 && below[0] && below[1]) {
        rc.tag = Region::disallowed;
        return rc;
    }
    bool impacts[2];
    for (int i = 0; i < 2; ++i) {
        int j = 1 - i;
        impacts[i] = reach[i] && (reach[j] || cfg.q_wall(j) > 0.0);
    }
    for (int i = 0; i < 2; ++i) {
        double th = impacts[i] ? wall_phase(cfg.potential(i), e[i], cfg.q_wall(i)) : pi;
        (i == 0 ? rc.theta1_hat : rc.theta2_hat) = th;
    }
    if (impacts[0] && impacts[1])
        rc.tag = Region::step_family;
    else if (impacts[0])
        rc.tag = Region::only_wall1_impacts;
    else if (impacts[1])
        rc.tag = Region::only_wall2_impacts;
    else
        rc.tag = Region::no_impacts;
    return rc;
}

/// Open interval of e1 values forming the step family at total energy h.
inline std::optional<std::pair<double, double>> step_family_interval(const StepConfig& cfg, double h) {
    if (!(h > 0.0)) throw DomainError("total energy h must be positive");
    if (!(h > cfg.h_step())) return std::nullopt;
    return std::make_pair(cfg.h_step(0), h - cfg.h_step(1));
}

struct DiagramSegment {
    double h = 0.0;
    std::string tag;  ///< "R1", "Rc", "R2" or "disallowed"
    double e1_lo = 0.0;
    double e1_hi = 0.0;
};

/// Closed e1-segments of each region per h; endpoints are exact.
inline std::vector<DiagramSegment> energy_momentum_diagram(const StepConfig& cfg, const std::vector<double>& h_grid) {
    if (h_grid.empty()) throw DomainError("energy grid is empty");
    std::vector<DiagramSegment> out;
    const double h1 = cfg.h_step(0), h2 = cfg.h_step(1);
    for (double h : h_grid) {
        if (!(h > 0.0)) throw DomainError("total energy h must be positive");
        double r1_hi = std::fmin(h, h1);
        double r2_lo = std::fmax(0.0, h - h2);
        out.push_back({h, "R1", 0.0, r1_hi});
        if (h > cfg.h_step()) out.push_back({h, "Rc", h1, h - h2});
        out.push_back({h, "R2", r2_lo, h});
        if (cfg.q_wall(0) > 0.0 && cfg.q_wall(1) > 0.0 && h < cfg.h_step())
            out.push_back({h, "disallowed", r2_lo, r1_hi});
    }
    return out;
}

}  // namespace stepiem
