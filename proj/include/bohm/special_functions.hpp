#pragma once

// Real special functions and quadrature used throughout the library:
// both real branches of the Lambert W function, the error function, Kummer's
// confluent hypergeometric function for negative arguments, and tanh-sinh
// (double exponential) quadrature for endpoint-singular integrands.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>

#include "bohm/error.hpp"

namespace bohm {

namespace detail {

// e split into a double and its rounding remainder, for 1 + e*x near x = -1/e.
inline constexpr double kEHi = 2.718281828459045;
inline constexpr double kELo = 1.4456468917292502e-16;

inline double branch_offset(double x) {
    // 1 + e*x with the product evaluated to ~1 ulp of the result.
    return std::fma(kEHi, x, 1.0) + kELo * x;
}

// Puiseux series of W about the branch point in p = sqrt(2(1 + e x)).
// The W0 branch takes p >= 0, the W_{-1} branch p <= 0.
inline double lambert_branch_series(double p) {
    constexpr double c[] = {-1.0,
                            1.0,
                            -1.0 / 3.0,
                            11.0 / 72.0,
                            -43.0 / 540.0,
                            769.0 / 17280.0,
                            -221.0 / 8505.0,
                            680863.0 / 43545600.0,
                            -1963.0 / 204120.0,
                            226287557.0 / 37623398400.0};
    double w = 0.0;
    for (int k = 9; k >= 0; --k) w = w * p + c[k];
    return w;
}

// Halley iteration on w e^w - x. Returns true on convergence.
inline bool lambert_halley(double x, double& w) {
    for (int it = 0; it < 40; ++it) {
        const double ew = std::exp(w);
        const double f = w * ew - x;
        if (f == 0.0) return true;
        const double wp1 = w + 1.0;
        const double fp = ew * wp1;
        if (fp == 0.0) return false;
        const double step = f / (fp - (w + 2.0) * f / (2.0 * wp1));
        if (!std::isfinite(step)) return false;
        w -= step;
        if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(w)))
            return true;
    }
    return false;
}

// Halley iteration on the logarithmic form w + ln(-w) = ln(-x), valid for
// w < -1. Used for W_{-1} away from the branch point, where e^w may be tiny.
// Takes ln(-x) directly so callers can go below the double range of x.
inline bool lambert_halley_log(double log_minus_x, double& w) {
    const double target = log_minus_x;
    for (int it = 0; it < 40; ++it) {
        const double f = w + std::log(-w) - target;
        const double fp = 1.0 + 1.0 / w;
        const double fpp = -1.0 / (w * w);
        if (fp == 0.0) return false;
        const double step = f / fp / (1.0 - f * fpp / (2.0 * fp * fp));
        if (!std::isfinite(step)) return false;
        w -= step;
        if (w >= -1.0) w = -1.0 - 1e-300;
        if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(w))
            return true;
    }
    return false;
}

// Bisection on w e^w = x over [lo, hi]; the map is monotone on each branch.
inline double lambert_bisect(double x, double lo, double hi, bool increasing) {
    for (int it = 0; it < 2000 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double f = mid * std::exp(mid) - x;
        if ((f < 0.0) == increasing) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Principal branch W0 on [-1/e, 0]; result in [-1, 0].
inline double lambert_w0(double x) {
    if (!(x <= 0.0)) throw DomainError("lambert_w0: argument must be <= 0, got " + std::to_string(x));
    if (x == 0.0) return 0.0;
    const double q = detail::branch_offset(x);
    if (q < 0.0) {
        // Allow round-off at the branch point itself.
        if (q > -4.0 * std::numeric_limits<double>::epsilon()) return -1.0;
        throw DomainError("lambert_w0: argument below -1/e: " + std::to_string(x));
    }
    const double p = std::sqrt(2.0 * q);
    double w;
    if (p < 0.05) {
        // Series truncation error ~p^10, already below double precision.
        return detail::lambert_branch_series(p);
    }
    if (x < -0.2) {
        w = detail::lambert_branch_series(p);
    } else {
        w = x * (1.0 - x * (1.0 - 1.5 * x));
    }
    if (detail::lambert_halley(x, w) && w >= -1.0 && w <= 0.0) return w;
    return detail::lambert_bisect(x, -1.0, 0.0, true);
}

/// Lower branch W_{-1} on [-1/e, 0); result <= -1.
inline double lambert_wm1(double x) {
    if (!(x < 0.0)) throw DomainError("lambert_wm1: argument must be < 0, got " + std::to_string(x));
    const double q = detail::branch_offset(x);
    if (q < 0.0) {
        if (q > -4.0 * std::numeric_limits<double>::epsilon()) return -1.0;
        throw DomainError("lambert_wm1: argument below -1/e: " + std::to_string(x));
    }
    const double p = std::sqrt(2.0 * q);
    if (p < 0.05) return detail::lambert_branch_series(-p);
    double w;
    bool ok;
    if (p < 0.8) {
        w = detail::lambert_branch_series(-p);
        ok = detail::lambert_halley(x, w);
    } else {
        const double l1 = std::log(-x);
        const double l2 = std::log(-l1);
        w = l1 - l2 + l2 / l1;
        ok = detail::lambert_halley_log(l1, w);
    }
    if (ok && w <= -1.0) return w;
    const double lo = std::min(-1.0, 2.0 * std::log(-x)) - 1.0;
    return detail::lambert_bisect(x, lo, -1.0, false);
}

inline double erf(double x) { return std::erf(x); }

/// q - log1p(q), accurate also for |q| << 1.
inline double q_minus_log1p(double q) {
    if (std::abs(q) < 0.1) {
        // sum_{k>=2} (-1)^k q^k / k
        double term = q * q;
        double sum = 0.0;
        for (int k = 2; k < 40; ++k) {
            const double t = term / k;
            sum += (k % 2 == 0) ? t : -t;
            if (std::abs(t) <= 1e-18 * std::abs(sum)) break;
            term *= q;
        }
        return sum;
    }
    return q - std::log1p(q);
}

/// Kummer's confluent hypergeometric function 1F1(a; b; x).
///
/// Negative arguments use the Kummer transformation
/// 1F1(a; b; x) = e^x 1F1(b - a; b; -x), whose series has positive terms,
/// and switch to the large-|x| asymptotic expansion beyond |x| = 50 (the
/// dropped e^x contribution is below 1e-20 relative there). Certified for
/// b > a > 0 and x <= 0, and for a, b > 0 with 0 <= x <= 700.
inline double kummer_1f1(double a, double b, double x) {
    if (b <= 0.0 && b == std::floor(b)) {
        throw ParameterError("kummer_1f1: b must not be a non-positive integer");
    }
    if (x == 0.0) return 1.0;

    auto positive_series = [](double aa, double bb, double z) {
        double term = 1.0;
        double sum = 1.0;
        for (int k = 0; k < 100000; ++k) {
            term *= (aa + k) / (bb + k) * z / (k + 1);
            sum += term;
            if (term <= 1e-17 * sum && k > z) return sum;
        }
        throw ConvergenceError("kummer_1f1: series did not converge");
    };

    if (x > 0.0) {
        if (!(a > 0.0 && b > 0.0 && x <= 700.0)) {
            throw ParameterError("kummer_1f1: unsupported regime for x > 0");
        }
        return positive_series(a, b, x);
    }
    if (!(a > 0.0 && b > a)) {
        throw ParameterError("kummer_1f1: negative x requires b > a > 0");
    }
    const double y = -x;
    if (y <= 50.0) return std::exp(x) * positive_series(b - a, b, y);

    // 1F1(a;b;x) ~ Gamma(b)/Gamma(b-a) y^{-a} sum_s (a)_s (a-b+1)_s / s! y^{-s}
    double term = 1.0;
    double sum = 1.0;
    double prev = std::numeric_limits<double>::infinity();
    for (int s = 0; s < 200; ++s) {
        const double next = term * (a + s) * (a - b + 1.0 + s) / ((s + 1) * y);
        if (next == 0.0) break;
        if (std::abs(next) > std::abs(prev)) break;  // asymptotic series turned
        sum += next;
        prev = term = next;
        if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
    }
    return std::exp(std::lgamma(b) - std::lgamma(b - a) - a * std::log(y)) * sum;
}

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    std::size_t evaluations = 0;
};

namespace detail {

template <class F>
double call_with_distances(F& f, double x, double from_a, double to_b) {
    if constexpr (std::invocable<F&, double, double, double>) {
        return f(x, from_a, to_b);
    } else {
        return f(x);
    }
}

}  // namespace detail

/// Tanh-sinh quadrature of f over (a, b).
///
/// The integrand is never evaluated at the endpoints. If f accepts three
/// arguments it is called as f(x, x - a, b - x) with both distances computed
/// without cancellation, so integrands with algebraic endpoint singularities
/// can be written in terms of the exact offset.
template <class F>
QuadratureResult integrate_singular(F&& f, double a, double b, double tol = 1e-10,
                                    int max_level = 12, double abs_tol = 0.0) {
    if (!(a < b)) throw DomainError("integrate_singular: need a < b");
    const double half = 0.5 * (b - a);
    constexpr double kHalfPi = 0.5 * std::numbers::pi;
    // Beyond t = 6.1 the abscissae sit within 1e-300 of the endpoints.
    constexpr double kTMax = 6.1;

    QuadratureResult res;
    double abs_sum = 0.0;  // sum of |terms|, sets the roundoff floor
    auto node = [&](double t) {
        // x = (a + b)/2 + half * tanh(u), u = pi/2 sinh t; weight dx/dt.
        const double u = kHalfPi * std::sinh(t);
        const double cu = std::cosh(kHalfPi * std::sinh(std::abs(t)));
        const double e = std::exp(-2.0 * std::abs(u));
        const double comp = 2.0 * e / (1.0 + e);  // 1 - |tanh u|
        const double w = half * kHalfPi * std::cosh(t) / (cu * cu);
        if (!(comp > 0.0) || w == 0.0) return 0.0;
        const double dist = half * comp;  // distance to the nearer endpoint
        if (dist == 0.0) return 0.0;
        double x, da, db;
        if (t < 0.0) {
            da = dist;
            db = (b - a) - dist;
            x = a + dist;
        } else {
            db = dist;
            da = (b - a) - dist;
            x = b - dist;
        }
        // Past rounding of x only the distance form still resolves the node.
        if constexpr (!std::invocable<F&, double, double, double>) {
            if (x <= a || x >= b) return 0.0;
        }
        ++res.evaluations;
        const double term = w * detail::call_with_distances(f, x, da, db);
        abs_sum += std::abs(term);
        return term;
    };

    double h = 1.0;
    double sum = node(0.0);
    for (int k = 1; k * h <= kTMax; ++k) sum += node(k * h) + node(-k * h);
    double estimate = sum * h;
    double err = std::numeric_limits<double>::infinity();

    for (int level = 1; level <= max_level; ++level) {
        h *= 0.5;
        double add = 0.0;
        for (int side = -1; side <= 1; side += 2) {
            int small_run = 0;
            for (int k = 1; k * h <= kTMax; k += 2) {
                const double term = node(side * k * h);
                add += term;
                if (k * h > 1.0 && std::abs(term) * h <= 1e-20 * std::abs(estimate)) {
                    if (++small_run >= 3) break;
                } else {
                    small_run = 0;
                }
            }
        }
        sum += add;
        const double next = sum * h;
        err = std::abs(next - estimate);
        estimate = next;
        if (!std::isfinite(estimate)) {
            throw ConvergenceError("integrate_singular: non-finite integrand");
        }
        const double floor = 64.0 * std::numeric_limits<double>::epsilon() * abs_sum * h;
        if (level >= 3 && (err <= std::max(tol * std::abs(estimate), abs_tol) || err <= floor ||
                            err <= 1e-300)) {
            res.value = estimate;
            res.error_estimate = err;
            return res;
        }
    }
    throw ConvergenceError("integrate_singular: no convergence after level " +
                           std::to_string(max_level) + " (a " + std::to_string(a) + ", b " + std::to_string(b) + ", estimate " +
                           std::to_string(estimate) + ", error " + std::to_string(err) + ")");
}

/// Integral of f over (a, inf) through x = a + u / (1 - u).
template <class F>
QuadratureResult integrate_semi_infinite(F&& f, double a, double tol = 1e-10,
                                         int max_level = 12) {
    auto g = [&](double u, double, double one_minus_u) {
        const double x = a + u / one_minus_u;
        const double jac = 1.0 / (one_minus_u * one_minus_u);
        if (!std::isfinite(x) || !std::isfinite(jac)) return 0.0;
        const double fx = f(x);
        return fx == 0.0 ? 0.0 : fx * jac;
    };
    return integrate_singular(g, 0.0, 1.0, tol, max_level);
}

}  // namespace bohm
