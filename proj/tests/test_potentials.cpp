#include "support.hpp"

#include <gtest/gtest.h>

using namespace stepiem;
using testing_support::odeint_flow;

TEST(Angles, WrapIntoHalfOpenRange) {
    EXPECT_DOUBLE_EQ(wrap_angle(pi), -pi);
    EXPECT_DOUBLE_EQ(wrap_angle(-pi), -pi);
    EXPECT_NEAR(wrap_angle(3.0 * pi + 0.25), -pi + 0.25, 1e-14);
    EXPECT_DOUBLE_EQ(wrap_positive(-0.5), two_pi - 0.5);
    EXPECT_NEAR(circle_distance(-pi + 1e-3, pi - 1e-3), 2e-3, 1e-12);
    EXPECT_NEAR(forward_offset(3.0, -3.0, two_pi), two_pi - 6.0, 1e-14);
    for (double x : {-1e3, -7.5, -1e-300, 0.0, 4.0, 1e6}) {
        double w = wrap_angle(x);
        EXPECT_GE(w, -pi);
        EXPECT_LT(w, pi);
    }
}

TEST(Numerics, QuadratureAgainstKnownIntegrals) {
    EXPECT_NEAR(integrate([](double x) { return std::sin(x); }, 0.0, pi), 2.0, 1e-13);
    EXPECT_NEAR(integrate([](double x) { return std::exp(-x * x); }, -6.0, 6.0), std::sqrt(pi), 1e-12);
    EXPECT_NEAR(integrate([](double x) { return 1.0 / (1.0 + x * x); }, 0.0, 1.0), pi / 4.0, 1e-14);
    QuadratureOptions tight;
    tight.max_panels = 3;
    EXPECT_THROW(integrate([](double x) { return std::sin(1.0 / (x + 1e-4)); }, 0.0, 1.0, tight), NumericalError);
}

TEST(Numerics, ChebyshevInterpolatesSmoothFunction) {
    auto x = ChebyshevSeries::nodes(-1.0, 2.0, 40);
    std::vector<double> y;
    for (double t : x) y.push_back(std::exp(t) * std::cos(3.0 * t));
    ChebyshevSeries c(-1.0, 2.0, y);
    for (double t = -1.0; t <= 2.0; t += 0.0371) EXPECT_NEAR(c(t), std::exp(t) * std::cos(3.0 * t), 1e-13);
    EXPECT_LT(c.tail(4), 1e-13 * c.scale());
}

TEST(Potentials, LinearOscillatorClosedForms) {
    auto v = Potential1D::linear_oscillator(1.0);
    auto d = oscillator_data(v, 0.5);
    EXPECT_DOUBLE_EQ(d.T, two_pi);
    EXPECT_DOUBLE_EQ(d.I, 0.5);
    EXPECT_NEAR(partial_period(v, 0.5, -0.5), 4.0 * pi / 3.0, 1e-15);
    EXPECT_NEAR(wall_phase(v, 0.5, -0.5), 2.0 * pi / 3.0, 1e-15);
}

TEST(Potentials, QuadraturePathMatchesClosedForm) {
    for (double w : {0.4, 1.0, 2.7}) {
        auto v = Potential1D::linear_oscillator(w), vq = v.quadrature_only();
        for (double e : {1e-3, 0.5, 3.0}) {
            auto a = oscillator_data(v, e), b = oscillator_data(vq, e);
            EXPECT_NEAR(b.T, a.T, 1e-12 * a.T);
            EXPECT_NEAR(b.I, a.I, 1e-12 * std::fmax(1.0, a.I));
            double qmax = a.q_max;
            for (double f : {-0.9, -0.3, 0.2, 0.999}) {
                double qw = f * qmax;
                EXPECT_NEAR(wall_phase(vq, e, qw), wall_phase(v, e, qw), 1e-12);
                EXPECT_NEAR(partial_period(vq, e, qw), partial_period(v, e, qw), 1e-11);
            }
        }
    }
}

TEST(Potentials, QuarticPeriodScaling) {
    // V = a q^4/4 gives T(e) proportional to e^(-1/4)
    auto v = Potential1D::quartic(1.3);
    double t1 = period(v, 1.0), t16 = period(v, 16.0);
    EXPECT_NEAR(t16, 0.5 * t1, 1e-12 * t1);
    // closed form through the Beta function B(1/4, 1/2)
    double a = 1.3, e = 1.0;
    double qm = std::pow(4.0 * e / a, 0.25);
    double beta = std::tgamma(0.25) * std::tgamma(0.5) / std::tgamma(0.75);  // int_0^1 du / sqrt(1-u^4) = beta / 4
    double exact = 4.0 * qm / std::sqrt(2.0 * e) * beta / 4.0;
    EXPECT_NEAR(t1, exact, 1e-12 * exact);
}

TEST(Potentials, ActionDerivativeIsInverseFrequency) {
    for (auto v : {Potential1D::quartic(0.7), Potential1D::exponential(1.0)}) {
        for (double e : {0.05, 0.8, 4.0}) {
            double h = 1e-4 * e;
            double dI = (action_and_frequency(v, e + h).first - action_and_frequency(v, e - h).first) / (2.0 * h);
            EXPECT_NEAR(dI, 1.0 / action_and_frequency(v, e).second, 1e-7) << v.label() << " e=" << e;
        }
    }
}

TEST(Potentials, WallPhaseEqualsPiTimesPeriodRatio) {
    // two independent quadrature ranges: T~ and the complementary travel time
    for (auto v : {Potential1D::quartic(2.0), Potential1D::exponential(0.5)}) {
        for (double e : {0.1, 1.0, 5.0}) {
            auto [qmin, qmax] = turning_points(v, e);
            for (double f : {0.05, 0.5, 0.95}) {
                for (double qw : {f * qmin, f * qmax}) {
                    auto w = wall_phase_data(v, e, qw);
                    EXPECT_NEAR(w.theta_wall, pi * w.T_tilde / period(v, e), 1e-11) << v.label();
                }
            }
        }
    }
}

TEST(Potentials, WallPhaseLimitsAtWallEnergy) {
    auto v = Potential1D::quartic(1.0);
    EXPECT_EQ(wall_phase(v, v.value(0.5), 0.5), 0.0);
    EXPECT_EQ(wall_phase(v, v.value(-0.5), -0.5), pi);
    EXPECT_NEAR(wall_phase(v, v.value(0.5) * (1.0 + 1e-10), 0.5), 0.0, 1e-4);
    EXPECT_THROW(wall_phase(v, 0.5 * v.value(0.5), 0.5), DomainError);
}

TEST(Potentials, AngleStateRoundTrip) {
    for (auto v : {Potential1D::linear_oscillator(1.7), Potential1D::quartic(1.0), Potential1D::exponential(2.0)}) {
        auto d = oscillator_data(v, 0.9);
        for (double th = -pi; th < pi; th += 0.173) {
            auto s = state_of_angle(v, d, th);
            EXPECT_NEAR(0.5 * s.p * s.p + v.value(s.q), 0.9, 1e-12);
            EXPECT_NEAR(circle_distance(angle_of_state(v, d, s.q, s.p), th), 0.0, 1e-10) << v.label();
        }
    }
    EXPECT_THROW(angle_of_state(Potential1D::quartic(1.0), 1.0, 0.0, 0.1), DomainError);
}

TEST(Potentials, AngleAdvancesLinearlyAlongTheFlow) {
    // the angle is a uniform clock: compare against an independent ODE solve
    for (auto v : {Potential1D::quartic(1.0), Potential1D::exponential(1.5)}) {
        OscillatorChart ch(v, 0.6);
        for (double th0 : {-2.5, -0.3, 0.0, 1.1, 3.0}) {
            auto s0 = ch.state_at(th0);
            for (double t : {0.37, 1.9, 6.1}) {
                auto ref = odeint_flow(v, s0, t);
                auto got = ch.state_at(th0 + ch.omega() * t);
                EXPECT_NEAR(got.q, ref.q, 1e-9) << v.label();
                EXPECT_NEAR(got.p, ref.p, 1e-9) << v.label();
            }
        }
    }
}

TEST(Potentials, ChartAgreesWithQuadrature) {
    auto v = Potential1D::quartic(1.0);
    OscillatorChart ch(v, 2.0);
    auto d = oscillator_data(v, 2.0);
    for (double th = -pi; th < pi; th += 0.0917) {
        auto a = ch.state_at(th), b = state_of_angle(v, d, th);
        EXPECT_NEAR(a.q, b.q, 1e-13);
        EXPECT_NEAR(a.p, b.p, 1e-12);
        EXPECT_NEAR(circle_distance(ch.angle_of(a.q, a.p), th), 0.0, 1e-12);
    }
    EXPECT_LE(ch.chart_size(), 2049u);
}

TEST(Potentials, ShapeValidation) {
    EXPECT_THROW(Potential1D::linear_oscillator(0.0), DomainError);
    EXPECT_THROW(Potential1D::quartic(-1.0), DomainError);
    auto bad = Potential1D::analytic("bump", [](double q) { return q * q * (1.0 - q); },
                                     [](double q) { return 2.0 * q - 3.0 * q * q; });
    EXPECT_THROW(bad.check_shape(-2.0, 2.0), DomainError);
    EXPECT_THROW(oscillator_data(Potential1D::quartic(1.0), 0.0), DomainError);
}
