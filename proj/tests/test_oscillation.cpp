#include <cmath>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

#include "bohm/oscillation.hpp"

using namespace bohm;

namespace {

using big = boost::multiprecision::cpp_bin_float_50;

// Reference solution in u = ln xi^2, where phi = e^u - 1 - u and the turning
// points are the two roots of phi(u) = E. 50-digit arithmetic throughout: the
// inverse square root at each turning point amplifies root errors.
struct LogOracle {
    big energy;
    big us, ub;

    explicit LogOracle(double e) : energy(e) {
        auto f = [this](const big& u) { return exp(u) - 1 - u - energy; };
        auto bisect = [&](big a, big b) {
            for (int i = 0; i < 200; ++i) {
                const big m = (a + b) / 2;
                if ((f(m) > 0) == (f(a) > 0)) a = m; else b = m;
            }
            return (a + b) / 2;
        };
        us = bisect(-energy - 2, 0);
        ub = bisect(0, energy + 2);
    }

    double xi_s() const { return static_cast<double>(exp(us / 2)); }
    double xi_b() const { return static_cast<double>(exp(ub / 2)); }

    // int dxi / sqrt(E - phi(xi^2)) from xi_s up to xi; u = mid + half sin(theta)
    // takes the endpoint singularities out.
    double phase_to(double xi) const {
        const big mid = (us + ub) / 2, half = (ub - us) / 2;
        return phase_to_theta(asin(std::min(big(1), (2 * log(big(xi)) - mid) / half)));
    }
    double phase_to_theta(const big& th_end) const {
        const big mid = (us + ub) / 2, half = (ub - us) / 2;
        auto g = [&](const big& th) {
            const big u = mid + half * sin(th);
            const big r = energy - (exp(u) - 1 - u);
            return r > 0 ? exp(u / 2) / 2 * half * cos(th) / sqrt(r) : big(0);
        };
        boost::math::quadrature::tanh_sinh<big> ts;
        return static_cast<double>(ts.integrate(g, -boost::math::constants::half_pi<big>(), th_end, 1e-15));
    }
    double half_period() const { return phase_to_theta(boost::math::constants::half_pi<big>()); }
};

}  // namespace

TEST(Oscillation, ExtremaMatchBisection) {
    for (double e : {1e-12, 1e-6, 1e-3, 0.019, 0.021, 0.5, 3.0, 40.0, 699.0, 701.0, 5000.0}) {
        const auto x = xi_extrema(e);
        const LogOracle o(e);
        EXPECT_NEAR(x.xi_b, o.xi_b(), 2e-15 * x.xi_b) << e;
        EXPECT_NEAR(x.xi_s, o.xi_s(), 1e-13 * o.xi_s()) << e;
        EXPECT_LE(x.xi_s, 1.0);
        EXPECT_GE(x.xi_b, 1.0);
    }
}

TEST(Oscillation, TinyLowerTurningPointUnderflowsToZero) {
    const auto x = xi_extrema(2000.0);
    EXPECT_EQ(x.xi_s, 0.0);
    EXPECT_GT(x.xi_b, 40.0);
}

TEST(Oscillation, HalfPeriodMatchesLogVariableQuadrature) {
    for (double e : {1e-6, 5e-5, 1e-4, 1e-3, 0.1, 1.0, 5.0, 30.0, 200.0}) {
        const XiOscillation osc(e);
        const double ref = LogOracle(e).half_period();
        EXPECT_NEAR(osc.half_period(1e-12), ref, 1e-9 * ref) << e;
        EXPECT_LT(osc.half_period(), std::numbers::pi);
    }
}

TEST(Oscillation, SmallAmplitudeLimit) {
    const XiOscillation osc(1e-10);
    EXPECT_NEAR(osc.half_period(), std::numbers::pi / std::numbers::sqrt2, 1e-11);
    // The expansion joins the quadrature without a visible step.
    const double below = XiOscillation(0.99e-4).half_period();
    const double above = XiOscillation(1.01e-4).half_period();
    EXPECT_NEAR(below, above, 2e-6 * std::numbers::pi / std::numbers::sqrt2 / 24.0 + 1e-12);
}

TEST(Oscillation, PartialPhaseMatchesOracle) {
    for (double e : {0.05, 2.0, 25.0}) {
        const XiOscillation osc(e);
        const LogOracle o(e);
        for (double frac : {0.1, 0.5, 0.9}) {
            const double xi = osc.xi_s() + frac * (osc.xi_b() - osc.xi_s());
            const double got = osc.phase(-0.5 * std::numbers::pi, osc.theta_of(xi));
            const double ref = o.phase_to(xi);
            EXPECT_NEAR(got, ref, 1e-9 * ref) << e << ' ' << frac;
        }
    }
}

TEST(Oscillation, PhaseInversionRoundTrip) {
    const XiOscillation osc(4.0);
    for (double th0 : {-1.2, 0.0, 0.7}) {
        const double up = osc.phase(th0, 1.3);
        EXPECT_NEAR(osc.theta_after_phase(th0, up, true), 1.3, 1e-10);
        const double down = osc.phase(-1.4, th0);
        EXPECT_NEAR(osc.theta_after_phase(th0, down, false), -1.4, 1e-10);
    }
}

TEST(Oscillation, ThetaAndXiAreInverse) {
    const XiOscillation osc(1.5);
    for (double th : {-1.5, -0.3, 0.0, 0.9, 1.55}) {
        EXPECT_NEAR(osc.theta_of(osc.xi_of(th)), th, 1e-9);
    }
    EXPECT_DOUBLE_EQ(osc.xi_of(0.5 * std::numbers::pi), osc.xi_b());
    EXPECT_DOUBLE_EQ(osc.xi_of(-0.5 * std::numbers::pi), osc.xi_s());
}

TEST(Oscillation, RadicandVanishesAtTurningPoints) {
    for (double e : {1e-4, 0.3, 12.0}) {
        const XiOscillation osc(e);
        EXPECT_NEAR(osc.radicand(osc.xi_b()), 0.0, 1e-14 * (1 + e));
        EXPECT_NEAR(osc.radicand(osc.xi_s()), 0.0, 1e-14 * (1 + e));
        const double mid = 0.5 * (osc.xi_s() + osc.xi_b());
        EXPECT_NEAR(osc.radicand(mid), e - phi_offset(mid * mid - 1.0), 1e-13 * (1 + e));
    }
}
