#pragma once

#include "stepiem/lo_closed_forms.hpp"

#include <boost/numeric/odeint.hpp>

#include <array>
#include <random>

namespace testing_support {

using namespace stepiem;

/// Random LO step system with the requested wall signs (0 picks at random).
inline LoSystem random_lo(std::mt19937_64& rng, int s1 = 0, int s2 = 0) {
    std::uniform_real_distribution<double> w(0.3, 3.0), q(0.1, 1.5), coin(0.0, 1.0);
    auto sign = [&](int s) { return s != 0 ? double(s) : (coin(rng) < 0.5 ? -1.0 : 1.0); };
    return {w(rng), w(rng), sign(s1) * q(rng), sign(s2) * q(rng)};
}

/// Random interior point of the step family, with h in (1.05, 6) h_step and
/// e1 kept 1e-3 away from both edges (relative).
inline std::pair<double, double> random_step_level(std::mt19937_64& rng, double h1s, double h2s) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double h = (h1s + h2s) * (1.05 + 5.0 * u(rng));
    double a = h1s, b = h - h2s;
    double e1 = a + (b - a) * (1e-3 + (1.0 - 2e-3) * u(rng));
    return {e1, h};
}

/// Reference integrator for one smooth oscillator: q'' = -V'(q), run with a
/// controlled Runge-Kutta-Dormand-Prince stepper.
inline PhasePoint odeint_flow(const Potential1D& v, PhasePoint s, double t) {
    using State = std::array<double, 2>;
    namespace ode = boost::numeric::odeint;
    State x{s.q, s.p};
    auto rhs = [&](const State& y, State& dy, double) {
        dy[0] = y[1];
        dy[1] = -v.derivative(y[0]);
    };
    ode::integrate_adaptive(ode::make_controlled<ode::runge_kutta_dopri5<State>>(1e-13, 1e-13), rhs, x, 0.0, t, 1e-3);
    return {x[0], x[1]};
}

}  // namespace testing_support
