#pragma once

// Dimensionless waveguide model (hbar = m = omega_z = 1).
//
// A spin-1/2 particle is released at t = 0 from the ground state of a harmonic
// axial trap into a semi-infinite harmonic waveguide with a hard wall at z = 0.
// The spatial wavefunction is shared by both prepared spinors; only the spin
// part of the Bohmian velocity tells them apart.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <string_view>

#include "bohm/error.hpp"

namespace bohm {

/// Numerical tolerances threaded through trajectory and quadrature code.
struct Tolerances {
    double ode_rtol = 1e-11;
    double quad = 1e-10;
    double special = 1e-12;
};

/// Transverse trap frequency omega (units of omega_z) and detector plane
/// position L (units of sqrt(hbar / m omega_z)).
struct ModelParams {
    double omega = 500.0;
    double detector_L = 50.0;
    Tolerances tol{};

    /// Throws ParameterError unless omega > 0 and L > 1.
    void validate() const {
        if (!(omega > 0.0) || !std::isfinite(omega)) {
            throw ParameterError("omega must be a finite positive number, got " +
                                 std::to_string(omega));
        }
        if (!(detector_L > 1.0) || !std::isfinite(detector_L)) {
            throw ParameterError("detector_L must be finite and > 1, got " +
                                 std::to_string(detector_L));
        }
    }
};

enum class SpinCase { Up, UpDown };

inline std::string_view to_string(SpinCase s) {
    return s == SpinCase::Up ? "up" : "updown";
}

inline SpinCase parse_spin(std::string_view name) {
    if (name == "up") return SpinCase::Up;
    if (name == "updown" || name == "up-down") return SpinCase::UpDown;
    throw ParameterError("unknown spin case '" + std::string(name) + "'");
}

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Vec3&, const Vec3&) = default;
};

using Position3 = Vec3;
using Velocity3 = Vec3;
using ComplexAmplitude = std::complex<double>;

/// Constant two-component spinor of a spin case: (1, 0) or (1, 1)/sqrt(2).
inline std::array<ComplexAmplitude, 2> spinor(SpinCase s) {
    if (s == SpinCase::Up) return {1.0, 0.0};
    const double r = 1.0 / std::numbers::sqrt2;
    return {r, r};
}

/// Spin vector (1/2) Psi^dagger sigma Psi / |Psi|^2, computed from the spinor.
inline Vec3 spin_vector(SpinCase s) {
    const auto [a, b] = spinor(s);
    const double norm2 = std::norm(a) + std::norm(b);
    const ComplexAmplitude cross = std::conj(a) * b;
    return {cross.real() / norm2, cross.imag() / norm2,
            0.5 * (std::norm(a) - std::norm(b)) / norm2};
}

/// Normalisation constant sqrt(4 omega) / pi^(3/4) of the ground state.
inline double psi_normalization(double omega) {
    return std::sqrt(4.0 * omega) / std::pow(std::numbers::pi, 0.75);
}

/// Spatial wavefunction at time t >= 0; exactly zero on and below the end
/// face z <= 0.
inline ComplexAmplitude psi_t(const Position3& r, double t, const ModelParams& p) {
    if (!(r.z > 0.0)) return {0.0, 0.0};
    const ComplexAmplitude w{1.0, t};
    const double rho2 = r.x * r.x + r.y * r.y;
    const ComplexAmplitude exponent =
        -r.z * r.z / (2.0 * w) - 0.5 * p.omega * ComplexAmplitude{rho2, 2.0 * t};
    return psi_normalization(p.omega) * r.z * std::pow(w, -1.5) * std::exp(exponent);
}

/// |Psi_0|^2 at an initial position; identical for both spin cases.
inline double born_density(const Position3& r0, const ModelParams& p) {
    if (!(r0.z > 0.0)) return 0.0;
    const double z2 = r0.z * r0.z;
    return 4.0 * p.omega / std::pow(std::numbers::pi, 1.5) * z2 *
           std::exp(-z2 - p.omega * (r0.x * r0.x + r0.y * r0.y));
}

/// Born probability of 0 < Z0 < L: erf(L) - (2L/sqrt(pi)) exp(-L^2).
inline double born_mass_below(double L) {
    if (!(L > 0.0)) return 0.0;
    return std::erf(L) - 2.0 * L / std::sqrt(std::numbers::pi) * std::exp(-L * L);
}

inline double lambda0(const ModelParams& p) { return born_mass_below(p.detector_L); }

/// Smallest z at which the up-down spin velocity may be evaluated.
inline constexpr double kZGuard = 1e-12;

/// Bohmian velocity: convective part t z/(1+t^2) z-hat plus the spin part.
inline Velocity3 velocity(const Position3& r, double t, SpinCase spin,
                          const ModelParams& p) {
    const double convective = t * r.z / (1.0 + t * t);
    if (spin == SpinCase::Up) {
        return {-p.omega * r.y, p.omega * r.x, convective};
    }
    if (!(r.z > kZGuard)) {
        throw SingularInputError("up-down velocity requested at z = " +
                                 std::to_string(r.z) + " (node at z = 0)");
    }
    return {0.0, 1.0 / r.z - r.z / (1.0 + t * t), p.omega * r.y + convective};
}

}  // namespace bohm
