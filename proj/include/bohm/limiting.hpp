#pragma once

// Limiting up-down arrival law for strong transverse confinement.
//
// As omega grows the first arrival collapses onto t_s, a function of the
// upper turning point xi_b alone. Lambda below is the Born density of xi_b
// (independent of omega); pushed through t_s = sqrt(L^2/xi_b^2 - 1) it gives a
// density on (0, sqrt(L^2 - 1)) plus an atom of weight eta at tau = 0 from
// trajectories with xi_b > L.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <vector>

#include "bohm/error.hpp"
#include "bohm/model.hpp"
#include "bohm/oscillation.hpp"
#include "bohm/special_functions.hpp"

namespace bohm {

/// Lower partner of x >= 1: the root l <= 1 of l^2 e^{-l^2} = x^2 e^{-x^2}.
/// Returns 0 once that value underflows.
inline double ell(double x) {
    if (!(x >= 1.0)) throw DomainError("ell: need x >= 1");
    return xi_extrema(phi_offset((x - 1.0) * (x + 1.0))).xi_s;
}

namespace detail {

// int_{ell(x)}^{min(x, L)} du / sqrt(phi(x^2) - phi(u^2)), in the arcsine
// variable of the oscillation with upper turning point x.
inline double turning_integral(double x, double L, double tol) {
    const XiOscillation osc(phi_offset((x - 1.0) * (x + 1.0)));
    constexpr double kHalfPi = 0.5 * std::numbers::pi;
    if (x <= L) return osc.half_period(tol);
    const double th = osc.theta_of(L);
    return osc.phase(-kHalfPi, th, tol);
}

}  // namespace detail

/// Density of the upper turning point xi_b over Born initial conditions with
/// 0 < Z0 < L. Depends on L only.
inline double lambda_density(double x, double L, double tol = 1e-10) {
    if (!(x >= 1.0)) throw DomainError("lambda_density: need x >= 1");
    if (!(L > 1.0)) throw ParameterError("lambda_density: need L > 1");
    if (x == 1.0) return 0.0;
    const double x2 = x * x;
    const double e = std::exp(-x2);
    if (e == 0.0) return 0.0;
    const double pref = 8.0 * x / (std::numbers::pi * born_mass_below(L)) * (x - 1.0) * (x + 1.0) * e;
    return pref * detail::turning_integral(x, L, tol);
}

inline double lambda_density(double x, const ModelParams& p) {
    return lambda_density(x, p.detector_L, p.tol.quad);
}

/// Cut-off above L for integrals of Lambda; the integrand is below e^{-x^2}.
inline constexpr double kLambdaTail = 10.0;

/// Weight of the tau = 0 atom: the probability that xi_b > L.
inline double eta(double L, double tol = 1e-10) {
    if (!(L > 1.0)) throw ParameterError("eta: need L > 1");
    // Below exp(-L^2 / 2) by a wide margin and under double range at L ~ 27.
    if (std::exp(-L * L) == 0.0) return 0.0;
    auto f = [&](double x) { return lambda_density(x, L, tol); };
    return integrate_singular(f, L, L + kLambdaTail, tol).value;
}

inline double eta(const ModelParams& p) { return eta(p.detector_L, p.tol.quad); }

/// Density part of the limiting arrival law; the atom is reported by eta().
inline double pi_s(double tau, double L, double tol = 1e-10) {
    if (!(tau > 0.0)) return 0.0;
    const double tmax = std::sqrt((L - 1.0) * (L + 1.0));
    if (tau >= tmax) return 0.0;
    const double u = 1.0 + tau * tau;
    const double x = L / std::sqrt(u);
    if (!(x > 1.0)) return 0.0;
    return tau * L / (u * std::sqrt(u)) * lambda_density(x, L, tol);
}

inline double pi_s(double tau, const ModelParams& p) { return pi_s(tau, p.detector_L, p.tol.quad); }

/// Angle between the limiting density's tangent and the time axis at its foot,
/// arctan(4.16 / L^2).
inline double podal_angle_analytic(const ModelParams& p) {
    const double L = p.detector_L;
    return std::atan(4.16 / (L * L));
}

/// Limiting law for one L with a cached CDF. Immutable after construction.
class LimitingDistribution {
  public:
    explicit LimitingDistribution(double L, double tol = 1e-10, int panels = 1600)
        : L_(L), tol_(tol) {
        if (!(L > 1.0)) throw ParameterError("LimitingDistribution: need L > 1");
        eta_ = bohm::eta(L, tol);
        build_cache(panels);
    }
    explicit LimitingDistribution(const ModelParams& p)
        : LimitingDistribution(p.detector_L, p.tol.quad) {}

    double L() const { return L_; }
    double eta() const { return eta_; }
    double tau_max() const { return std::sqrt((L_ - 1.0) * (L_ + 1.0)); }

    double density(double tau) const { return pi_s(tau, L_, tol_); }

    /// P(t_s <= t), including the atom at 0.
    double cdf(double t) const {
        if (t < 0.0) return 0.0;
        if (t >= tau_max()) return 1.0;
        const double x = L_ / std::sqrt(1.0 + t * t);
        return std::min(1.0, eta_ + mass_above(x));
    }

    /// Lower bound on the finite-omega arrival CDF: every arrival lies below
    /// sinh(2 pi / sqrt(omega) + asinh t_s).
    double cdf_shifted(double t, double omega) const {
        if (t < 0.0) return 0.0;
        const double s = std::asinh(t) - 2.0 * std::numbers::pi / std::sqrt(omega);
        if (s < 0.0) return 0.0;
        return cdf(std::sinh(s));
    }

    /// Density integral plus atom (1 when converged).
    double total_mass() const { return eta_ + mass_above(1.0); }

  private:
    // int_x^L Lambda from the cached grid, cubic Hermite between nodes.
    double mass_above(double x) const {
        if (x >= x_hi_) return 0.0;
        x = std::max(x, 1.0);
        const double hx = (x_hi_ - 1.0) / static_cast<double>(nodes_.size() - 1);
        auto i = static_cast<std::size_t>((x - 1.0) / hx);
        if (i >= nodes_.size() - 1) i = nodes_.size() - 2;
        const double x0 = 1.0 + hx * static_cast<double>(i);
        const double u = (x - x0) / hx;
        const double h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
        const double h10 = u * (1.0 - u) * (1.0 - u);
        const double h01 = u * u * (3.0 - 2.0 * u);
        const double h11 = u * u * (u - 1.0);
        // d/dx int_x^L Lambda = -Lambda
        return h00 * nodes_[i] - hx * h10 * dens_[i] + h01 * nodes_[i + 1] - hx * h11 * dens_[i + 1];
    }

    void build_cache(int panels) {
        // Lambda < e^{-x^2} x^3 scale; beyond x = 12 nothing is representable
        // against the leading mass.
        x_hi_ = std::min(L_, 12.0);
        const std::size_t n = static_cast<std::size_t>(panels) + 1;
        nodes_.assign(n, 0.0);
        dens_.assign(n, 0.0);
        const double hx = (x_hi_ - 1.0) / static_cast<double>(panels);
        for (std::size_t i = 0; i < n; ++i) {
            dens_[i] = lambda_density(1.0 + hx * static_cast<double>(i), L_, tol_);
        }
        static constexpr double kNode[4] = {0.1834346424956498, 0.5255324099163290,
                                            0.7966664774136267, 0.9602898564975363};
        static constexpr double kWeight[4] = {0.3626837833783620, 0.3137066458778873,
                                              0.2223810344533745, 0.1012285362903763};
        // Accumulate from the top so that small tail masses keep full precision.
        for (std::size_t i = n - 1; i-- > 0;) {
            const double a = 1.0 + hx * static_cast<double>(i);
            const double c = a + 0.5 * hx;
            double acc = 0.0;
            for (int j = 0; j < 4; ++j) {
                const double d = 0.5 * hx * kNode[j];
                acc += kWeight[j] * (lambda_density(c - d, L_, tol_) + lambda_density(c + d, L_, tol_));
            }
            nodes_[i] = nodes_[i + 1] + 0.5 * hx * acc;
        }
    }

    double L_;
    double tol_;
    double eta_ = 0.0;
    double x_hi_ = 1.0;
    std::vector<double> nodes_;  // int_{x_i}^{x_hi} Lambda
    std::vector<double> dens_;   // Lambda(x_i)
};

inline void write_limit_grid_csv(std::ostream& os, const LimitingDistribution& d,
                                 const std::vector<double>& taus) {
    const auto old = os.precision(17);
    os << "tau,pi_s\n";
    for (double t : taus) os << t << ',' << d.density(t) << '\n';
    os.precision(old);
}

/// Tangent angle at the upper foot of a histogram: least-squares slope of
/// the normalised counts against bin centres over the last `k` nonempty bins,
/// converted to arctan(-slope).
template <class Hist>
double podal_angle_estimate(const Hist& hist, std::size_t k = 5) {
    if (k < 2) throw ParameterError("podal_angle_estimate: need k >= 2");
    const std::vector<double> dens = hist.density();
    std::vector<double> xs, ys;
    for (std::size_t i = dens.size(); i-- > 0 && xs.size() < k;) {
        if (hist.counts[i] == 0) continue;
        xs.push_back(0.5 * (hist.edges[i] + hist.edges[i + 1]));
        ys.push_back(dens[i]);
    }
    if (xs.size() < k) {
        throw DomainError("podal_angle_estimate: fewer than k nonempty bins");
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(k);
    my /= static_cast<double>(k);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return std::atan(-sxy / sxx);
}

}  // namespace bohm
