#pragma once

// The bounded oscillation of xi = Z / sqrt(1 + t^2) on an up-down trajectory.
//
// Along a trajectory ln xi^2 - xi^2 - omega Y^2 is conserved. Writing
// phi(x) = x - 1 - ln x >= 0, the conserved value is -1 - E with the
// "energy" E = phi(Z0^2) + omega Y0^2 >= 0, and xi oscillates between the two
// roots xi_s <= 1 <= xi_b of phi(xi^2) = E. These are sqrt(-W0(g)) and
// sqrt(-W_{-1}(g)) with g = -exp(-1 - E). Phase integrals
//   int dxi / sqrt(E - phi(xi^2))
// are evaluated after xi = mid + half sin(theta), which turns the two inverse
// square-root endpoint singularities into a smooth, bounded integrand.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "bohm/error.hpp"
#include "bohm/special_functions.hpp"

namespace bohm {

/// phi(1 + d) = d - ln(1 + d), accurate for small d.
inline double phi_offset(double d) { return q_minus_log1p(d); }

/// Energy E = phi(Z0^2) + omega Y0^2 of an up-down initial condition.
inline double oscillation_energy(double y0, double z0, double omega) {
    return phi_offset((z0 - 1.0) * (z0 + 1.0)) + omega * y0 * y0;
}

struct XiExtrema {
    double xi_s = 1.0;
    double xi_b = 1.0;
};

namespace detail {

// Newton polish of phi(1 + d) = energy in the offset d = x - 1.
inline double polish_phi_root(double d, double energy) {
    for (int it = 0; it < 8; ++it) {
        if (d == 0.0) return d;
        const double f = phi_offset(d) - energy;
        const double step = f * (1.0 + d) / d;
        const double next = d - step;
        if (!(next > -1.0)) break;
        d = next;
        if (std::abs(step) <= 2.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(d))) break;
    }
    return d;
}

}  // namespace detail

/// Solves phi(xi^2) = energy for both roots. xi_s is 0 when exp(-1 - E)
/// underflows.
inline XiExtrema xi_extrema(double energy) {
    if (!(energy >= 0.0)) throw DomainError("xi_extrema: energy must be >= 0");
    if (energy == 0.0) return {};
    double ws, wb;
    if (energy < 0.02) {
        // Near the branch point use p = sqrt(2(1 + e g)) = sqrt(-2 expm1(-E)).
        const double p = std::sqrt(-2.0 * std::expm1(-energy));
        ws = detail::lambert_branch_series(p);
        wb = detail::lambert_branch_series(-p);
    } else if (energy < 700.0) {
        const double g = -std::exp(-1.0 - energy);
        ws = lambert_w0(g);
        wb = lambert_wm1(g);
    } else {
        ws = 0.0;
        const double l1 = -1.0 - energy;
        wb = l1 - std::log(-l1);
        detail::lambert_halley_log(l1, wb);
    }
    XiExtrema r;
    const double db = detail::polish_phi_root(-wb - 1.0, energy);
    r.xi_b = std::sqrt(1.0 + db);
    if (-ws >= 0.5) {
        r.xi_s = std::sqrt(1.0 + detail::polish_phi_root(-ws - 1.0, energy));
    } else if (std::exp(-1.0 - energy) == 0.0) {
        r.xi_s = 0.0;
    } else {
        // Small root: Newton on u = ln xi^2 keeps its relative precision.
        double u = ws < 0.0 ? std::log(-ws) : -1.0 - energy;
        for (int it = 0; it < 8; ++it) {
            const double step = (u - std::exp(u) + 1.0 + energy) / (1.0 - std::exp(u));
            u -= step;
            if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(u)) break;
        }
        r.xi_s = std::exp(0.5 * u);
    }
    return r;
}

/// One energy level of the xi oscillation, with its phase integrals.
class XiOscillation {
  public:
    explicit XiOscillation(double energy) : energy_(energy) {
        const XiExtrema e = xi_extrema(energy);
        xi_s_ = e.xi_s;
        xi_b_ = e.xi_b;
        mid_ = 0.5 * (xi_b_ + xi_s_);
        half_ = 0.5 * (xi_b_ - xi_s_);
        bottom_scale_ = half_ > 0.0 ? std::max(1e-12, std::sqrt(2.0 * xi_s_ / half_)) : 1.0;
        short_piece_ = 0.05 * std::min(1.0, bottom_scale_);
    }

    double energy() const { return energy_; }
    double xi_s() const { return xi_s_; }
    double xi_b() const { return xi_b_; }
    bool degenerate() const { return half_ == 0.0; }

    /// E - phi(xi^2), evaluated relative to the nearer extremum.
    double radicand(double xi) const {
        const bool upper = xi >= mid_;
        const double e = upper ? xi_b_ : xi_s_;
        return radicand_from(e, (e - xi) * (e + xi), xi);
    }

    double theta_of(double xi) const {
        if (degenerate()) return 0.0;
        const double u = (xi - mid_) / half_;
        return std::asin(std::clamp(u, -1.0, 1.0));
    }

    double xi_of(double theta) const {
        if (theta >= 0.0) {
            const double s = std::sin(0.5 * (kHalfPi - theta));
            return xi_b_ - 2.0 * half_ * s * s;
        }
        const double s = std::sin(0.5 * (theta + kHalfPi));
        return xi_s_ + 2.0 * half_ * s * s;
    }

    /// d(phase)/d(theta) given the offsets of theta from -pi/2 and pi/2.
    double phase_density(double from_bottom, double to_top) const {
        if (degenerate()) return 1.0 / std::numbers::sqrt2;
        const bool upper = to_top <= from_bottom;
        const double off = upper ? to_top : from_bottom;
        const double s = std::sin(0.5 * off);
        const double dist = 2.0 * half_ * s * s;
        const double e = upper ? xi_b_ : xi_s_;
        const double xi = upper ? xi_b_ - dist : xi_s_ + dist;
        const double diff = upper ? dist * (e + xi) : -dist * (e + xi);
        const double r = radicand_from(e, diff, xi);
        const double cos_theta = std::sin(off);
        if (!(r > 0.0) || dist == 0.0) {
            // Endpoint limit sqrt(2 half / |R'(e)|), R'(xi) = 2/xi - 2 xi.
            return std::sqrt(2.0 * half_ / std::abs(2.0 / e - 2.0 * e));
        }
        return half_ * cos_theta / std::sqrt(r);
    }

    double phase_density(double theta) const {
        return phase_density(theta + kHalfPi, kHalfPi - theta);
    }

    /// Phase accumulated while theta runs from th1 to th2.
    double phase(double th1, double th2, double tol = 1e-12) const {
        if (th1 == th2) return 0.0;
        if (th2 < th1) return -phase(th2, th1, tol);
        if (th1 <= -kHalfPi && th2 >= kHalfPi) return half_period(tol);
        if (th2 - th1 < short_piece_) {
            // The density is analytic in theta; 5-point Gauss-Legendre is exact
            // to rounding on pieces short against the distance to xi = 0.
            return gauss5(th1, th2);
        }
        // A small xi_s puts a near-singularity at distance ~bottom_scale_ above
        // theta = -pi/2; graded breakpoints keep every piece well resolved.
        double acc = 0.0;
        double a = th1;
        for (double off = bottom_scale_; a < th2; off *= 8.0) {
            const double b = std::min(th2, -kHalfPi + off);
            if (b > a) {
                acc += piece(a, b, tol);
                a = b;
            }
        }
        return acc;
    }

    /// int_{xi_s}^{xi_b} dxi / sqrt(E - phi(xi^2)); bounded above by pi.
    double half_period(double tol = 1e-12) const {
        // Small amplitude: the radicand loses digits like eps / E, so use the
        // expansion pi/sqrt(2) (1 - E/24 + E^2/2304 + O(E^3)) instead.
        if (degenerate() || energy_ < 1e-4) {
            const double e = energy_;
            return std::numbers::pi / std::numbers::sqrt2 * (1.0 - e / 24.0 + e * e / 2304.0);
        }
        if (bottom_scale_ >= 1.0) {
            auto k = [this](double, double a, double b) { return phase_density(a, b); };
            return integrate_singular(k, -kHalfPi, kHalfPi, tol).value;
        }
        const double cut = -kHalfPi + bottom_scale_;
        return phase(-kHalfPi, cut, tol) + top_piece(cut, tol);
    }

    /// theta reached after accumulating `target` phase from th_start, moving
    /// up (towards xi_b) or down. Safeguarded Newton on the monotone phase.
    double theta_after_phase(double th_start, double target, bool ascending,
                             double tol = 1e-12) const {
        if (target <= 0.0 || degenerate()) return th_start;
        double lo = ascending ? th_start : -kHalfPi;
        double hi = ascending ? kHalfPi : th_start;
        // F(theta) = accumulated phase - target; increasing in the travel direction.
        auto accumulated = [&](double th) {
            return ascending ? phase(th_start, th, tol) : phase(th, th_start, tol);
        };
        double th = ascending ? th_start + target / phase_density(th_start)
                              : th_start - target / phase_density(th_start);
        th = std::clamp(th, lo, hi);
        double f = accumulated(th) - target;
        for (int it = 0; it < 100; ++it) {
            const bool past = f > 0.0;
            if (ascending == past) hi = std::min(hi, th); else lo = std::max(lo, th);
            const double k = phase_density(th);
            double next = ascending ? th - f / k : th + f / k;
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            const double step = next - th;
            // Incremental update keeps each quadrature short.
            f += ascending ? phase(th, next, tol) : phase(next, th, tol);
            th = next;
            if (std::abs(step) <= 1e-14 || hi - lo <= 1e-15) return th;
        }
        throw ConvergenceError("XiOscillation: phase inversion did not converge");
    }

  private:
    static constexpr double kHalfPi = 0.5 * std::numbers::pi;

    double piece(double a, double b, double tol) const {
        if (b - a < short_piece_) return gauss5(a, b);
        // Phases are O(1); pieces hugging theta = -pi/2 may carry almost no
        // weight, so they are converged in absolute terms.
        auto k = [this](double th) { return phase_density(th); };
        return integrate_singular(k, a, b, tol, 12, 1e-3 * tol).value;
    }

    // Pieces from `from` up to pi/2, graded like phase() and with the
    // distance to the top handed to the density.
    double top_piece(double from, double tol) const {
        double acc = 0.0;
        double a = from;
        for (double off = 8.0 * bottom_scale_;; off *= 8.0) {
            const double b = -kHalfPi + off;
            if (b >= 0.5) {
                auto k = [this](double th, double, double to_b) {
                    return phase_density(th + kHalfPi, to_b);
                };
                return acc + integrate_singular(k, a, kHalfPi, tol).value;
            }
            acc += piece(a, b, tol);
            a = b;
        }
    }

    double gauss5(double th1, double th2) const {
        static constexpr double kNode[5] = {0.0, 0.5384693101056831, -0.5384693101056831,
                                            0.9061798459386640, -0.9061798459386640};
        static constexpr double kWeight[5] = {0.5688888888888889, 0.4786286704993665,
                                              0.4786286704993665, 0.2369268850561891,
                                              0.2369268850561891};
        const double c = 0.5 * (th1 + th2);
        const double r = 0.5 * (th2 - th1);
        double acc = 0.0;
        for (int i = 0; i < 5; ++i) acc += kWeight[i] * phase_density(c + r * kNode[i]);
        return acc * r;
    }

    // E - phi(xi^2) = phi(e^2) - phi(xi^2) = D - ln(1 + D/xi^2), D = e^2 - xi^2.
    // Far from e the log is taken of e / xi directly: 1 + q would lose the
    // relative precision of a tiny xi_s.
    static double radicand_from(double e, double diff, double xi) {
        const double x2 = xi * xi;
        const double q = diff / x2;
        if (std::abs(q) > 0.5) return diff - 2.0 * std::log(e / xi);
        return diff * ((xi - 1.0) * (xi + 1.0) / x2) + q_minus_log1p(q);
    }

    double energy_;
    double xi_s_ = 1.0;
    double xi_b_ = 1.0;
    double mid_ = 1.0;
    double half_ = 0.0;
    double short_piece_ = 0.05;
    double bottom_scale_ = 1.0;
};

}  // namespace bohm
