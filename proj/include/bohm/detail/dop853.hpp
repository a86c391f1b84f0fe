#pragma once

// Single DOP853 step with the embedded 5th/3rd order error estimate used by
// Hairer's code. Fixed-size state, no allocation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

#include "bohm/detail/dop853_tableau.hpp"

namespace bohm::detail {

template <std::size_t N>
using State = std::array<double, N>;

template <std::size_t N>
struct Dop853Step {
    State<N> y{};
    State<N> f{};       // derivative at the new point (first stage of the next step)
    double error = 0.0; // scaled error norm, accept when <= 1
};

/// Advances an autonomous system y' = rhs(y) by h from (y0, f0).
template <std::size_t N, class Rhs>
Dop853Step<N> dop853_step(const Rhs& rhs, const State<N>& y0, const State<N>& f0,
                          double h, double rtol, const State<N>& atol) {
    using namespace dop853;
    std::array<State<N>, kStages + 1> k;
    k[0] = f0;
    for (int s = 1; s < kStages; ++s) {
        State<N> ys = y0;
        for (int j = 0; j < s; ++j) {
            const double a = kA[s][j];
            if (a == 0.0) continue;
            for (std::size_t i = 0; i < N; ++i) ys[i] += h * a * k[j][i];
        }
        k[s] = rhs(ys);
    }
    Dop853Step<N> out;
    out.y = y0;
    for (int j = 0; j < kStages; ++j) {
        const double b = kB[j];
        if (b == 0.0) continue;
        for (std::size_t i = 0; i < N; ++i) out.y[i] += h * b * k[j][i];
    }
    out.f = rhs(out.y);
    k[kStages] = out.f;

    double e5 = 0.0;
    double e3 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        double r5 = 0.0;
        double r3 = 0.0;
        for (int j = 0; j <= kStages; ++j) {
            r5 += kE5[j] * k[j][i];
            r3 += kE3[j] * k[j][i];
        }
        const double scale = atol[i] + rtol * std::max(std::abs(y0[i]), std::abs(out.y[i]));
        r5 /= scale;
        r3 /= scale;
        e5 += r5 * r5;
        e3 += r3 * r3;
    }
    if (e5 == 0.0 && e3 == 0.0) {
        out.error = 0.0;
    } else {
        out.error = std::abs(h) * e5 / std::sqrt((e5 + 0.01 * e3) * static_cast<double>(N));
    }
    return out;
}

/// Quintic Hermite interpolation on [0, h] from values, first and second
/// derivatives at both ends; u in [0, 1].
inline double quintic_hermite(double u, double h, double p0, double d0, double dd0,
                              double p1, double d1, double dd1) {
    const double u2 = u * u;
    const double u3 = u2 * u;
    const double u4 = u3 * u;
    const double u5 = u4 * u;
    const double h00 = 1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5;
    const double h10 = u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5;
    const double h20 = 0.5 * (u2 - 3.0 * u3 + 3.0 * u4 - u5);
    const double h01 = 10.0 * u3 - 15.0 * u4 + 6.0 * u5;
    const double h11 = -4.0 * u3 + 7.0 * u4 - 3.0 * u5;
    const double h21 = 0.5 * (u3 - 2.0 * u4 + u5);
    return h00 * p0 + h * h10 * d0 + h * h * h20 * dd0 + h01 * p1 + h * h11 * d1 +
           h * h * h21 * dd1;
}

}  // namespace bohm::detail
