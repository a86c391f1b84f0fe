#include <array>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "bohm/sampling.hpp"
#include "bohm/trajectories.hpp"

using namespace bohm;

namespace {

ModelParams params(double omega, double L) {
    ModelParams p;
    p.omega = omega;
    p.detector_L = L;
    return p;
}

// Classical RK4 in t on the raw velocity field.
Position3 rk4_step(const Position3& r, double t, double h, SpinCase spin, const ModelParams& p) {
    auto add = [](const Position3& a, const Vec3& v, double c) {
        return Position3{a.x + c * v.x, a.y + c * v.y, a.z + c * v.z};
    };
    const Vec3 k1 = velocity(r, t, spin, p);
    const Vec3 k2 = velocity(add(r, k1, h / 2), t + h / 2, spin, p);
    const Vec3 k3 = velocity(add(r, k2, h / 2), t + h / 2, spin, p);
    const Vec3 k4 = velocity(add(r, k3, h), t + h, spin, p);
    return {r.x + h / 6 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x),
            r.y + h / 6 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y),
            r.z + h / 6 * (k1.z + 2 * k2.z + 2 * k3.z + k4.z)};
}

Position3 rk4_position(Position3 r, double t_end, double h, SpinCase spin, const ModelParams& p) {
    const int n = static_cast<int>(std::ceil(t_end / h));
    const double dt = t_end / n;
    for (int i = 0; i < n; ++i) r = rk4_step(r, i * dt, dt, spin, p);
    return r;
}

// First t with z = L, by fixed steps then bisection on the last step length.
double rk4_arrival(Position3 r, double h, const ModelParams& p) {
    double t = 0.0;
    for (;;) {
        const Position3 next = rk4_step(r, t, h, SpinCase::UpDown, p);
        if (next.z >= p.detector_L) {
            double a = 0.0, b = h;
            for (int i = 0; i < 80; ++i) {
                const double m = 0.5 * (a + b);
                if (rk4_step(r, t, m, SpinCase::UpDown, p).z >= p.detector_L) b = m; else a = m;
            }
            return t + 0.5 * (a + b);
        }
        r = next;
        t += h;
    }
}

}  // namespace

TEST(SpinUp, ClosedFormMatchesIntegratedVelocity) {
    const auto p = params(20.0, 50);
    const Position3 r0{0.05, -0.1, 0.7};
    for (double t : {0.5, 2.0, 6.0}) {
        const Position3 a = spin_up_position(r0, t, p);
        const Position3 b = rk4_position(r0, t, 1e-4, SpinCase::Up, p);
        EXPECT_NEAR(a.x, b.x, 1e-9);
        EXPECT_NEAR(a.y, b.y, 1e-9);
        EXPECT_NEAR(a.z, b.z, 1e-9);
    }
}

TEST(SpinUp, ArrivalLandsOnDetector) {
    const auto p = params(500, 50);
    for (double z0 : {0.01, 0.3, 1.0, 3.7, 49.9}) {
        const Position3 r0{0.01, 0.02, z0};
        const double tau = spin_up_arrival(r0, p);
        EXPECT_NEAR(spin_up_position(r0, tau, p).z, 50.0, 1e-12 * 50.0);
    }
    EXPECT_THROW(spin_up_arrival({0, 0, 50.0}, p), DomainError);
    EXPECT_THROW(spin_up_arrival({0, 0, 0.0}, p), DomainError);
}

TEST(UpDown, EnvelopeBracketsStart) {
    const auto p = params(500, 50);
    for (std::uint64_t k = 0; k < 200; ++k) {
        const Position3 r0 = sample_one(17, k, p).r0;
        const Envelope env = envelope(r0.y, r0.z, p);
        EXPECT_LE(env.xi_s, r0.z * (1 + 1e-12));
        EXPECT_GE(env.xi_b, r0.z * (1 - 1e-12));
        EXPECT_LE(env.t_s, env.t_b);
        EXPECT_NEAR(updown_invariant(r0.z, r0.y, p.omega), -1.0 - env.energy, 1e-12 * (1 + env.energy));
    }
}

TEST(UpDown, ArrivalMatchesBruteForceIntegrationInTime) {
    const auto p = params(50.0, 10.0);
    for (const Position3 r0 : {Position3{0.3, 0.1, 0.5}, Position3{0.0, -0.2, 1.4}, Position3{0.1, 0.05, 2.2}}) {
        const UpDownResult res = integrate_updown(r0, p, UpDownOptions{});
        ASSERT_TRUE(res.first.has_value());
        EXPECT_NEAR(res.first->t, rk4_arrival(r0, 2e-4, p), 1e-7 * res.first->t);
    }
}

TEST(UpDown, PositionsMatchBruteForceIntegration) {
    const auto p = params(50.0, 50.0);
    const Position3 r0{0.3, 0.1, 0.5};
    UpDownOptions opt;
    opt.count_crossings = false;
    opt.require_crossing = false;
    for (double t : {1.0, 4.0, 10.0}) opt.checkpoints.push_back(std::asinh(t));
    opt.s_cap = std::asinh(10.0);
    const UpDownResult res = integrate_updown(r0, p, opt);
    ASSERT_EQ(res.checkpoints.size(), 3u);
    for (const auto& st : res.checkpoints) {
        const Position3 ref = rk4_position(r0, st.t(), 2e-4, SpinCase::UpDown, p);
        const Position3 got = st.position();
        EXPECT_NEAR(got.x, ref.x, 1e-12);
        EXPECT_NEAR(got.y, ref.y, 1e-7);
        EXPECT_NEAR(got.z, ref.z, 1e-7 * ref.z);
    }
}

TEST(UpDown, FixedPointMovesWithTheSpreadingPacket) {
    const auto p = params(500, 50);
    const UpDownResult res = integrate_updown({0.0, 0.0, 1.0}, p, UpDownOptions{});
    ASSERT_TRUE(res.first.has_value());
    EXPECT_NEAR(res.first->t, std::sqrt(50.0 * 50.0 - 1.0), 1e-10);
}

TEST(UpDown, ConservationAndConfinement) {
    for (const auto& p : {params(500, 50), params(1e4, 50), params(5, 10)}) {
        for (std::uint64_t k = 0; k < 60; ++k) {
            const Position3 r0 = sample_one(23, k, p).r0;
            const UpDownResult res = integrate_updown(r0, p, UpDownOptions{});
            EXPECT_LT(res.diag.max_h_drift, 1e-8) << p.omega << ' ' << k;
            EXPECT_LT(res.diag.max_envelope_excess, 1e-6) << p.omega << ' ' << k;
        }
    }
}

TEST(UpDown, CrossingSandwich) {
    for (const auto& p : {params(500, 50), params(1e4, 50), params(50, 10)}) {
        const double bound = tau_max_bound(p);
        for (std::uint64_t k = 0; k < 150; ++k) {
            const Position3 r0 = sample_one(29, k, p).r0;
            const UpDownResult res = integrate_updown(r0, p, UpDownOptions{});
            const double tau = res.first->t;
            EXPECT_GE(tau, res.env.t_s * (1 - 1e-9));
            EXPECT_LE(tau, first_crossing_bound(res.env.t_s, p.omega) * (1 + 1e-9));
            EXPECT_LE(tau, bound * (1 + 1e-9));
            EXPECT_GE(res.diag.crossings, 1);
        }
    }
}

TEST(UpDown, QuadratureSolutionAgreesWithIntegrator) {
    for (const auto& p : {params(50, 50), params(500, 50), params(1e4, 50)}) {
        for (std::uint64_t k = 0; k < 15; ++k) {
            const Position3 r0 = sample_one(31, k, p).r0;
            UpDownOptions opt;
            opt.count_crossings = false;
            opt.require_crossing = false;
            opt.s_cap = updown_s_cap(p);
            for (int j = 1; j <= 20; ++j) opt.checkpoints.push_back(opt.s_cap * j / 20.0);
            const UpDownResult res = integrate_updown(r0, p, opt);
            for (const auto& st : res.checkpoints) {
                EXPECT_NEAR(quadrature_xi(res.env, r0.y, r0.z, p, st.s), st.xi, 1e-6);
            }
        }
    }
}

TEST(UpDown, SmallFrequencyApproachesFreeSpreading) {
    const auto p = params(1e-6, 50);
    const Position3 r0{0.0, 0.2, 0.8};
    UpDownOptions opt;
    opt.count_crossings = false;
    opt.require_crossing = false;
    opt.checkpoints = {std::asinh(1.0), std::asinh(5.0)};
    opt.s_cap = std::asinh(5.0);
    const UpDownResult res = integrate_updown(r0, p, opt);
    for (const auto& st : res.checkpoints) {
        const Position3 ref = updown_smallomega_position(r0, st.t());
        EXPECT_NEAR(st.position().y, ref.y, 1e-5);
        EXPECT_NEAR(st.position().z, ref.z, 1e-5 * ref.z);
    }
}

TEST(UpDown, UpperBoundIsFiniteForSmallFrequency) {
    const auto p = params(1e-4, 10);
    EXPECT_TRUE(std::isfinite(updown_s_cap(p)));
    EXPECT_GT(updown_s_cap(p), std::asinh(std::sqrt(99.0)));
}

TEST(UpDown, RejectsStartOutsideGuide) {
    const auto p = params(500, 10);
    EXPECT_THROW(integrate_updown({0, 0, 0.0}, p, UpDownOptions{}), Error);
    EXPECT_THROW(integrate_updown({0, 0, 10.0}, p, UpDownOptions{}), Error);
}
