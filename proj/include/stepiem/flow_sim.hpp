#pragma once

#include "step_system.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace stepiem {

struct ImpactState {
    double q1 = 0.0, q2 = 0.0, p1 = 0.0, p2 = 0.0;
    double t = 0.0;

    double q(int i) const { return i == 0 ? q1 : q2; }
    double p(int i) const { return i == 0 ? p1 : p2; }
};

enum class EventKind { wall1_impact, wall2_impact, sigma1_crossing, sigma2_crossing, corner_hit };

inline const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::wall1_impact: return "Wall1Impact";
        case EventKind::wall2_impact: return "Wall2Impact";
        case EventKind::sigma1_crossing: return "Sigma1Crossing";
        case EventKind::sigma2_crossing: return "Sigma2Crossing";
        case EventKind::corner_hit: return "CornerHit";
    }
    return "?";
}

/// An event with the state at the event time. For impacts this is the
/// incoming state; the simulator continues from the reflected one.
struct Event {
    EventKind kind = EventKind::sigma1_crossing;
    ImpactState state;
};

struct FlowTolerances {
    double corner = 1e-10;  ///< distance to the other wall, and time between wall hits
};

/// Event-driven simulation of the impact flow. Each degree of freedom is
/// tracked by its action-angle chart; impacts send theta_wall to -theta_wall.
class Simulator {
public:
    /// Start from an explicit phase-space state; energies are read off it.
    Simulator(const StepConfig& cfg, const ImpactState& s, FlowTolerances tol = {}) : cfg_(&cfg), tol_(tol) {
        double e[2] = {0.5 * s.p1 * s.p1 + cfg.potential(0).value(s.q1),
                       0.5 * s.p2 * s.p2 + cfg.potential(1).value(s.q2)};
        init(e);
        for (int i = 0; i < 2; ++i) th_[i] = charts_[i].angle_of(s.q(i), s.p(i));
        state_ = s;
        check_outside();
    }

    /// Start from angles on a level set.
    Simulator(const StepConfig& cfg, const LevelSet& ls, double theta1, double theta2, FlowTolerances tol = {})
        : cfg_(&cfg), tol_(tol) {
        double e[2] = {ls.e1, ls.e2()};
        init(e);
        th_[0] = wrap_angle(theta1);
        th_[1] = wrap_angle(theta2);
        state_.t = 0.0;
        refresh();
        if (th_[0] == 0.0) {
            state_.q1 = charts_[0].data().q_max;
            state_.p1 = 0.0;
        }
        check_outside();
    }

    const ImpactState& state() const { return state_; }
    double energy(int i) const { return charts_[i].energy(); }
    double angle(int i) const { return th_[i]; }
    double omega(int i) const { return charts_[i].omega(); }
    const OscillatorChart& chart(int i) const { return charts_[i]; }
    /// Wall angle of dof i, or nullopt when its wall cannot be reached.
    std::optional<double> wall_angle(int i) const { return wall_[i]; }
    bool stopped() const { return stopped_; }

    /// Advance both oscillators by dt; the caller guarantees no event inside.
    void propagate_smooth(double dt) {
        for (int i = 0; i < 2; ++i) th_[i] = wrap_angle(th_[i] + charts_[i].omega() * dt);
        state_.t += dt;
        refresh();
    }

    /// Earliest future event and the time until it, without applying it.
    std::pair<EventKind, double> next_event_time() const {
        if (stopped_) throw DomainError("trajectory stopped at the corner");
        EventKind kind = EventKind::sigma1_crossing;
        double best = std::numeric_limits<double>::infinity();
        auto consider = [&](EventKind k, double dt) {
            if (dt < best) {
                best = dt;
                kind = k;
            }
        };
        for (int i = 0; i < 2; ++i) {
            double d = forward_offset(th_[i], 0.0, two_pi);
            if (d == 0.0) d = two_pi;
            consider(i == 0 ? EventKind::sigma1_crossing : EventKind::sigma2_crossing, d / charts_[i].omega());
        }
        double wall_dt[2] = {-1.0, -1.0};
        for (int i = 0; i < 2; ++i) {
            if (!wall_[i]) continue;
            int j = 1 - i;
            double d = forward_offset(th_[i], *wall_[i], two_pi);
            double dt = d / charts_[i].omega();
            double qj = charts_[j].q_at(th_[j] + charts_[j].omega() * dt);
            double gap = cfg_->q_wall(j) - qj;
            if (std::fabs(gap) <= tol_.corner) {
                consider(EventKind::corner_hit, dt);
            } else if (gap > 0.0) {
                wall_dt[i] = dt;
                consider(i == 0 ? EventKind::wall1_impact : EventKind::wall2_impact, dt);
            }
        }
        if (wall_dt[0] >= 0.0 && wall_dt[1] >= 0.0 && std::fabs(wall_dt[0] - wall_dt[1]) <= tol_.corner) {
            double dt = std::fmin(wall_dt[0], wall_dt[1]);
            if (dt <= best) {
                best = dt;
                kind = EventKind::corner_hit;
            }
        }
        return {kind, best};
    }

    /// Event that step() would produce, without changing the simulator.
    Event next_event() const {
        Simulator probe = *this;
        return probe.step();
    }

    /// Advance to the next event and apply it (reflection, or stop at a corner).
    Event step() {
        auto [kind, dt] = next_event_time();
        propagate_smooth(dt);
        Event ev{kind, state_};
        switch (kind) {
            case EventKind::sigma1_crossing:
            case EventKind::sigma2_crossing: {
                int i = kind == EventKind::sigma1_crossing ? 0 : 1;
                th_[i] = 0.0;
                set_dof(i, charts_[i].data().q_max, 0.0);
                ev.state = state_;
                break;
            }
            case EventKind::wall1_impact:
            case EventKind::wall2_impact: {
                int i = kind == EventKind::wall1_impact ? 0 : 1;
                double qw = cfg_->q_wall(i);
                double speed = std::sqrt(2.0 * std::fmax(charts_[i].energy() - cfg_->potential(i).value(qw), 0.0));
                th_[i] = *wall_[i];
                set_dof(i, qw, -speed);
                ev.state = state_;
                th_[i] = wrap_angle(-*wall_[i]);
                set_dof(i, qw, speed);
                break;
            }
            case EventKind::corner_hit:
                stopped_ = true;
                break;
        }
        return ev;
    }

private:
    void init(const double* e) {
        for (int i = 0; i < 2; ++i) {
            charts_[i] = OscillatorChart(cfg_->potential(i), e[i]);
            if (e[i] > cfg_->h_step(i)) wall_[i] = charts_[i].upper_angle_of_position(cfg_->q_wall(i));
        }
    }

    void refresh() {
        for (int i = 0; i < 2; ++i) {
            auto s = charts_[i].state_at(th_[i]);
            set_dof(i, s.q, s.p);
        }
    }

    void set_dof(int i, double q, double p) {
        (i == 0 ? state_.q1 : state_.q2) = q;
        (i == 0 ? state_.p1 : state_.p2) = p;
    }

    void check_outside() const {
        if (state_.q1 < cfg_->q_wall(0) - tol_.corner && state_.q2 < cfg_->q_wall(1) - tol_.corner)
            throw DomainError("state lies inside the step");
    }

    const StepConfig* cfg_;
    FlowTolerances tol_;
    std::array<OscillatorChart, 2> charts_;
    std::optional<double> wall_[2];
    double th_[2] = {0.0, 0.0};
    ImpactState state_;
    bool stopped_ = false;
};

/// Smooth flow over dt from an arbitrary state. The linear oscillator uses
/// the exact rotation; other potentials go through a chart built for the call.
inline ImpactState propagate_smooth(const StepConfig& cfg, const ImpactState& s, double dt) {
    ImpactState out = s;
    out.t = s.t + dt;
    for (int i = 0; i < 2; ++i) {
        const auto& v = cfg.potential(i);
        double q = s.q(i), p = s.p(i), nq, np;
        if (v.closed_form()) {
            double w = v.omega(), c = std::cos(w * dt), sn = std::sin(w * dt);
            nq = q * c + p / w * sn;
            np = -q * w * sn + p * c;
        } else {
            OscillatorChart ch(v, 0.5 * p * p + v.value(q));
            auto st = ch.state_at(ch.angle_of(q, p) + ch.omega() * dt);
            nq = st.q;
            np = st.p;
        }
        (i == 0 ? out.q1 : out.q2) = nq;
        (i == 0 ? out.p1 : out.p2) = np;
    }
    return out;
}

inline Event next_event(const StepConfig& cfg, const ImpactState& s) { return Simulator(cfg, s).next_event(); }

struct SectionSample {
    double theta2 = 0.0;
    double return_time = 0.0;
    int wall1_hits = 0;  ///< impacts during the return that ends at this sample
    int wall2_hits = 0;
};

struct SectionRun {
    std::vector<SectionSample> samples;
    bool truncated = false;  ///< a corner hit ended the run early
    std::vector<Event> events;
};

struct SectionOptions {
    bool record_events = false;
    std::size_t max_events_per_return = 10'000'000;
    FlowTolerances tol = {};
};

/// Successive returns to Sigma_1 = {p1 = 0, q1 = q1_max}, starting on it with
/// theta2 = theta2_0.
inline SectionRun return_map_samples(const StepConfig& cfg, const LevelSet& ls, double theta2_0, std::size_t n,
                                     const SectionOptions& opt = {}) {
    SectionRun run;
    Simulator sim(cfg, ls, 0.0, theta2_0, opt.tol);
    run.samples.reserve(n);
    double t_prev = 0.0;
    int hits[2] = {0, 0};
    std::size_t since = 0;
    while (run.samples.size() < n) {
        Event ev = sim.step();
        if (opt.record_events) run.events.push_back(ev);
        if (ev.kind == EventKind::corner_hit) {
            run.truncated = true;
            break;
        }
        if (ev.kind == EventKind::wall1_impact) ++hits[0];
        if (ev.kind == EventKind::wall2_impact) ++hits[1];
        if (ev.kind == EventKind::sigma1_crossing) {
            const auto& s = sim.state();
            run.samples.push_back({sim.chart(1).angle_of(s.q2, s.p2), s.t - t_prev, hits[0], hits[1]});
            t_prev = s.t;
            hits[0] = hits[1] = 0;
            since = 0;
        } else if (++since > opt.max_events_per_return) {
            throw NumericalError("no return to the section within the event budget");
        }
    }
    return run;
}

}  // namespace stepiem
