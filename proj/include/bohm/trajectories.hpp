#pragma once

// Bohmian trajectories for the two spin cases.
//
// Spin up trajectories are helices known in closed form. Spin up-down
// trajectories are integrated in s = asinh(t), where with xi = Z / cosh(s)
// the guidance equations become the autonomous system
//   dY/ds = 1/xi - xi,   dxi/ds = omega Y,
// with X constant. The first arrival at z = L is the first root of
// xi(s) cosh(s) - L.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "bohm/detail/dop853.hpp"
#include "bohm/error.hpp"
#include "bohm/model.hpp"
#include "bohm/oscillation.hpp"

namespace bohm {

// ---------------------------------------------------------------------------
// Spin up

inline Position3 spin_up_position(const Position3& r0, double t, const ModelParams& p) {
    const double c = std::cos(p.omega * t);
    const double s = std::sin(p.omega * t);
    return {r0.x * c - r0.y * s, r0.y * c + r0.x * s, r0.z * std::sqrt(1.0 + t * t)};
}

/// Time at which Z0 sqrt(1 + t^2) reaches L.
inline double spin_up_arrival(const Position3& r0, const ModelParams& p) {
    const double L = p.detector_L;
    if (!(r0.z > 0.0 && r0.z < L)) {
        throw DomainError("spin_up_arrival: need 0 < Z0 < L, got Z0 = " + std::to_string(r0.z));
    }
    return std::sqrt((L - r0.z) * (L + r0.z)) / r0.z;
}

// ---------------------------------------------------------------------------
// Spin up-down: envelope

/// Per-initial-condition invariants bounding xi and every crossing time.
struct Envelope {
    double g = -1.0 / std::numbers::e;  ///< -Z0^2 exp(-Z0^2 - omega Y0^2)
    double xi_s = 1.0;
    double xi_b = 1.0;
    double t_s = 0.0;
    double t_b = 0.0;
    bool t_b_infinite = false;  ///< xi_s underflowed to 0
    double energy = 0.0;        ///< phi(Z0^2) + omega Y0^2 = -1 - ln(-g)
};

inline Envelope envelope(double y0, double z0, const ModelParams& p) {
    if (!(z0 > 0.0)) throw DomainError("envelope: need z0 > 0");
    const double L = p.detector_L;
    Envelope env;
    env.energy = oscillation_energy(y0, z0, p.omega);
    env.g = -std::exp(-1.0 - env.energy);
    const XiExtrema x = xi_extrema(env.energy);
    env.xi_s = x.xi_s;
    env.xi_b = x.xi_b;
    env.t_s = env.xi_b < L ? std::sqrt((L - env.xi_b) * (L + env.xi_b)) / env.xi_b : 0.0;
    if (env.xi_s > 0.0) {
        env.t_b = std::sqrt((L - env.xi_s) * (L + env.xi_s)) / env.xi_s;
    } else {
        env.t_b = std::numeric_limits<double>::infinity();
        env.t_b_infinite = true;
    }
    return env;
}

/// Constant of motion ln xi^2 - xi^2 - omega Y^2.
inline double updown_invariant(double xi, double y, double omega) {
    return std::log(xi * xi) - xi * xi - omega * y * y;
}

/// Upper bound sinh(2 pi / sqrt(omega) + asinh(t_s)) on the first crossing.
inline double first_crossing_bound(double t_s, double omega) {
    return std::sinh(2.0 * std::numbers::pi / std::sqrt(omega) + std::asinh(t_s));
}

/// Uniform bound on every up-down first arrival time, sinh(2 pi/sqrt(omega) +
/// asinh sqrt(L^2 - 1)).
inline double tau_max_bound(const ModelParams& p) {
    const double L = p.detector_L;
    return first_crossing_bound(std::sqrt((L - 1.0) * (L + 1.0)), p.omega);
}

/// Integration horizon in s: asinh(margin * tau_max_bound), evaluated without
/// overflow for small omega.
inline double updown_s_cap(const ModelParams& p, double margin = 1.05) {
    const double L = p.detector_L;
    const double arg = 2.0 * std::numbers::pi / std::sqrt(p.omega) +
                       std::asinh(std::sqrt((L - 1.0) * (L + 1.0)));
    if (arg > 30.0) return arg + std::log(margin);
    return std::asinh(margin * std::sinh(arg));
}

// ---------------------------------------------------------------------------
// Spin up-down: numerical integration

struct UpDownState {
    double s = 0.0;
    double xi = 1.0;
    double y = 0.0;
    double x0 = 0.0;

    double t() const { return std::sinh(s); }
    Position3 position() const { return {x0, y, xi * std::cosh(s)}; }
};

struct CrossingEvent {
    double t = 0.0;
    int index = 1;
    int direction = 1;  ///< sign of dZ/dt at the crossing
};

struct UpDownOptions {
    double rtol = 1e-11;
    double s_cap = 0.0;  ///< <= 0 selects updown_s_cap(p)
    /// Continue past the first crossing up to s_cap and count all crossings.
    bool count_crossings = true;
    /// Throw when no crossing occurs before s_cap.
    bool require_crossing = true;
    /// Output points in s (ascending); the integrator lands on each exactly.
    std::vector<double> checkpoints;
};

struct UpDownDiagnostics {
    int crossings = 0;
    double max_h_drift = 0.0;         ///< max |H - H0| / |H0| over accepted steps
    double max_envelope_excess = 0.0; ///< max(xi_s - xi, xi - xi_b, 0) over accepted steps
    double min_xi = std::numeric_limits<double>::infinity();
    double max_xi = 0.0;
    long steps = 0;
    long rejected = 0;
    double s_end = 0.0;
};

struct UpDownResult {
    std::optional<CrossingEvent> first;
    UpDownDiagnostics diag;
    Envelope env;
    std::vector<UpDownState> checkpoints;
};

namespace detail {

struct UpDownRhs {
    double omega;
    State<2> operator()(const State<2>& v) const {
        // v = (Y, xi)
        return {1.0 / v[1] - v[1], omega * v[0]};
    }
};

// Z - L along a step, from the quintic Hermite interpolant of xi.
struct CrossingProbe {
    double s0, h, L;
    double xi0, dxi0, ddxi0, xi1, dxi1, ddxi1;

    double operator()(double u) const {
        const double xi = quintic_hermite(u, h, xi0, dxi0, ddxi0, xi1, dxi1, ddxi1);
        return xi * std::cosh(s0 + u * h) - L;
    }
};

}  // namespace detail

/// Integrates the up-down guidance equations from r0 and reports the first
/// arrival at z = L together with conservation diagnostics.
inline UpDownResult integrate_updown(const Position3& r0, const ModelParams& p,
                                     const UpDownOptions& opt) {
    p.validate();
    const double L = p.detector_L;
    const double omega = p.omega;
    if (!(r0.z > 0.0 && r0.z < L)) {
        throw DomainError("integrate_updown: need 0 < Z0 < L, got Z0 = " + std::to_string(r0.z));
    }
    UpDownResult res;
    res.env = envelope(r0.y, r0.z, p);
    const Envelope& env = res.env;
    const double s_cap = opt.s_cap > 0.0 ? opt.s_cap : updown_s_cap(p);
    const double s_last_out = opt.checkpoints.empty() ? 0.0 : opt.checkpoints.back();
    const double s_end = std::max(s_cap, s_last_out);

    // Fixed point of the (Y, xi) system: xi stays 1 and Z = cosh s.
    if (r0.y == 0.0 && r0.z == 1.0) {
        res.first = CrossingEvent{std::sqrt((L - 1.0) * (L + 1.0)), 1, 1};
        res.diag.crossings = 1;
        res.diag.min_xi = res.diag.max_xi = 1.0;
        res.diag.s_end = s_end;
        for (double s : opt.checkpoints) res.checkpoints.push_back({s, 1.0, 0.0, r0.x});
        return res;
    }

    const detail::UpDownRhs rhs{omega};
    const double energy = env.energy;
    const double h_ref = 1.0 + energy;  // |H0|
    auto drift = [&](double xi, double y) {
        const double e = phi_offset((xi - 1.0) * (xi + 1.0)) + omega * y * y;
        return std::abs(e - energy) / h_ref;
    };
    auto second = [&](const detail::State<2>& v, const detail::State<2>& f) {
        // d2/ds2 of (Y, xi)
        return detail::State<2>{-(1.0 / (v[1] * v[1]) + 1.0) * f[1], omega * f[0]};
    };
    auto z_minus_l = [&](double s, double xi) { return xi * std::cosh(s) - L; };
    auto dz_ds = [&](double s, const detail::State<2>& v) {
        return omega * v[0] * std::cosh(s) + v[1] * std::sinh(s);
    };

    const double rtol = opt.rtol;
    const double y_scale = std::max(std::abs(r0.y), std::sqrt(std::max(energy, 1e-6) / omega));
    const detail::State<2> atol{rtol * 1e-2 * y_scale, rtol * 1e-2 * std::max(env.xi_s, 1e-8)};

    detail::State<2> y{r0.y, r0.z};
    detail::State<2> f = rhs(y);
    double s = 0.0;
    double h = 0.01 * std::min(1.0, r0.z) / (1.0 + std::sqrt(omega));
    double f_prev = z_minus_l(0.0, r0.z);
    std::size_t next_out = 0;
    while (next_out < opt.checkpoints.size() && opt.checkpoints[next_out] <= 0.0) {
        res.checkpoints.push_back({opt.checkpoints[next_out], y[1], y[0], r0.x});
        ++next_out;
    }
    res.diag.min_xi = res.diag.max_xi = r0.z;

    constexpr long kMaxSteps = 50'000'000;
    bool rejected_last = false;
    while (s < s_end) {
        if (res.diag.steps + res.diag.rejected > kMaxSteps) {
            throw IntegrationError("integrate_updown: step budget exhausted");
        }
        double target = s_end;
        if (next_out < opt.checkpoints.size()) target = std::min(target, opt.checkpoints[next_out]);
        bool lands = false;
        double step = h;
        if (s + step >= target) {
            step = target - s;
            lands = true;
        }
        if (!(step > 1e-15 * (1.0 + s))) {
            throw IntegrationError("integrate_updown: step size underflow at s = " + std::to_string(s));
        }
        const auto trial = detail::dop853_step(rhs, y, f, step, rtol, atol);
        const bool finite = std::isfinite(trial.y[0]) && std::isfinite(trial.y[1]) && trial.y[1] > 0.0;
        if (!finite || trial.error > 1.0) {
            const double err = finite ? trial.error : 1e6;
            h = step * std::max(0.2, 0.9 * std::pow(err, -0.125));
            rejected_last = true;
            ++res.diag.rejected;
            continue;
        }

        // Accepted step [s, s + step].
        const double s0 = s;
        const auto y0 = y;
        const auto f0 = f;
        const double s1 = lands ? target : s + step;
        y = trial.y;
        f = trial.f;
        s = s1;
        ++res.diag.steps;
        {
            double factor = trial.error == 0.0 ? 10.0 : std::min(10.0, 0.9 * std::pow(trial.error, -0.125));
            if (rejected_last) factor = std::min(1.0, factor);
            if (!lands || step >= h) h = step * factor;
            rejected_last = false;
        }

        const double xi = y[1];
        if (xi * std::cosh(s) < kZGuard) {
            throw IntegrationError("integrate_updown: trajectory reached the z = 0 guard");
        }
        res.diag.max_h_drift = std::max(res.diag.max_h_drift, drift(xi, y[0]));
        res.diag.min_xi = std::min(res.diag.min_xi, xi);
        res.diag.max_xi = std::max(res.diag.max_xi, xi);
        res.diag.max_envelope_excess =
            std::max({res.diag.max_envelope_excess, env.xi_s - xi, xi - env.xi_b});

        // Crossing detection on [s0, s1].
        const double f_now = z_minus_l(s, xi);
        const auto dd0 = second(y0, f0);
        const auto dd1 = second(y, f);
        const detail::CrossingProbe probe{s0, s1 - s0, L, y0[1], f0[1], dd0[1], y[1], f[1], dd1[1]};
        int changes = 0;
        double bracket_lo = 0.0, bracket_hi = 1.0;
        if ((f_prev < 0.0) != (f_now < 0.0)) {
            changes = 1;
        } else {
            // Both ends on one side: look for an excursion across inside the step.
            const double d0 = dz_ds(s0, y0);
            const double d1 = dz_ds(s1, y);
            const bool turns = f_now < 0.0 ? (d0 > 0.0 && d1 < 0.0) : (d0 < 0.0 && d1 > 0.0);
            if (turns) {
                constexpr int kProbe = 16;
                double prev_u = 0.0;
                for (int i = 1; i < kProbe; ++i) {
                    const double u = static_cast<double>(i) / kProbe;
                    if ((probe(u) < 0.0) != (f_prev < 0.0)) {
                        changes = 2;
                        bracket_lo = prev_u;
                        bracket_hi = u;
                        break;
                    }
                    prev_u = u;
                }
            }
        }
        if (changes > 0 && !res.first) {
            // Bisection on the interpolant, then Newton polish with true steps.
            double lo = bracket_lo, hi = bracket_hi;
            for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
                const double mid = 0.5 * (lo + hi);
                if ((probe(mid) < 0.0) == (f_prev < 0.0)) lo = mid; else hi = mid;
            }
            double hs = 0.5 * (lo + hi) * (s1 - s0);
            detail::State<2> ys = y0;
            for (int it = 0; it < 6; ++it) {
                const auto ev = detail::dop853_step(rhs, y0, f0, hs, rtol, atol);
                ys = ev.y;
                const double g = z_minus_l(s0 + hs, ys[1]);
                if (std::abs(g) <= 1e-11 * L) break;
                hs -= g / dz_ds(s0 + hs, ys);
            }
            const double s_star = s0 + hs;
            if (std::abs(z_minus_l(s_star, ys[1])) > 1e-9 * L) {
                throw IntegrationError("integrate_updown: crossing localisation failed");
            }
            res.first = CrossingEvent{std::sinh(s_star), 1, dz_ds(s_star, ys) >= 0.0 ? 1 : -1};
        }
        res.diag.crossings += changes;
        f_prev = f_now;

        if (lands && next_out < opt.checkpoints.size() && s == opt.checkpoints[next_out]) {
            res.checkpoints.push_back({s, y[1], y[0], r0.x});
            ++next_out;
        }
        const bool outputs_done = next_out >= opt.checkpoints.size();
        if (res.first && !opt.count_crossings && outputs_done) break;
    }
    res.diag.s_end = s;
    if (!res.first && opt.require_crossing) {
        throw IntegrationError("integrate_updown: no crossing of z = L before s_cap = " +
                               std::to_string(s_cap) + " for r0 = (" + std::to_string(r0.x) +
                               ", " + std::to_string(r0.y) + ", " + std::to_string(r0.z) + ")");
    }
    return res;
}

/// Convenience overload: integrate with relative tolerance `tol` up to `s_cap`.
inline UpDownResult integrate_updown(const Position3& r0, const ModelParams& p, double tol,
                                     double s_cap = 0.0) {
    UpDownOptions opt;
    opt.rtol = tol;
    opt.s_cap = s_cap;
    return integrate_updown(r0, p, opt);
}

// ---------------------------------------------------------------------------
// Spin up-down: quadrature solution

/// xi(s) from the implicit quadrature solution: whole half-cycles of the
/// oscillation are counted and the remaining partial phase is inverted.
inline double quadrature_xi(const Envelope& env, double y0, double z0, const ModelParams& p,
                            double s, double tol = 1e-12) {
    if (!(s >= 0.0)) throw DomainError("quadrature_xi: need s >= 0");
    const XiOscillation osc(env.energy);
    if (osc.degenerate() || s == 0.0) return s == 0.0 ? z0 : osc.xi_b();
    constexpr double kHalfPi = 0.5 * std::numbers::pi;

    // Direction of the first leg: towards xi_b when Y0 > 0, towards xi_s when
    // Y0 < 0; for Y0 = 0 the start is an extremum and dY/ds = 1/xi - xi decides.
    bool up_first;
    double th0;
    if (y0 > 0.0) {
        up_first = true;
        th0 = osc.theta_of(z0);
    } else if (y0 < 0.0) {
        up_first = false;
        th0 = osc.theta_of(z0);
    } else {
        up_first = z0 < 1.0;
        th0 = up_first ? -kHalfPi : kHalfPi;
    }

    const double target = std::sqrt(p.omega) * s;
    const double first_leg = up_first ? osc.phase(th0, kHalfPi, tol) : osc.phase(-kHalfPi, th0, tol);
    if (target <= first_leg) {
        return osc.xi_of(osc.theta_after_phase(th0, target, up_first, tol));
    }
    const double half = osc.half_period(tol);
    const double rest = target - first_leg;
    const double n = std::floor(rest / half);
    const double rem = rest - n * half;
    // After the first leg the motion reverses at each completed half-cycle.
    const bool even = std::fmod(n, 2.0) == 0.0;
    const bool ascending = up_first ? !even : even;
    const double start = ascending ? -kHalfPi : kHalfPi;
    return osc.xi_of(osc.theta_after_phase(start, rem, ascending, tol));
}

/// Small-omega asymptotic up-down trajectory: X = X0,
/// Y = Y0 + (1/Z0 - Z0) asinh t, Z = Z0 sqrt(1 + t^2). Test oracle only.
inline Position3 updown_smallomega_position(const Position3& r0, double t) {
    return {r0.x, r0.y + (1.0 / r0.z - r0.z) * std::asinh(t), r0.z * std::sqrt(1.0 + t * t)};
}

}  // namespace bohm
