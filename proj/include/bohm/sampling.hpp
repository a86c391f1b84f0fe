#pragma once

// Initial positions from the Born density, truncated to 0 < Z0 < L.

#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

#include "bohm/error.hpp"
#include "bohm/model.hpp"
#include "bohm/rng.hpp"

namespace bohm {

struct SampleBatch {
    std::vector<Position3> positions;
    std::uint64_t seed = 0;
    std::size_t requested = 0;
    std::size_t rejected = 0;  ///< draws discarded for Z0 >= L
};

struct SampleDraw {
    Position3 r0;
    std::size_t rejected = 0;
};

/// Draw k of the batch with this seed. X0, Y0 ~ N(0, 1/(2 omega)); Z0^2 is
/// Gamma(3/2, 1), built as Exp(1) + N(0,1)^2 / 2. Draws with Z0 >= L are
/// discarded and redrawn from the same substream.
inline SampleDraw sample_one(std::uint64_t seed, std::uint64_t k, const ModelParams& p) {
    PhiloxStream rng(seed, k);
    const double sigma = 1.0 / std::sqrt(2.0 * p.omega);
    SampleDraw d;
    for (;;) {
        const double x = sigma * rng.normal();
        const double y = sigma * rng.normal();
        const double n = rng.normal();
        const double z = std::sqrt(rng.exponential() + 0.5 * n * n);
        if (z > 0.0 && z < p.detector_L) {
            d.r0 = {x, y, z};
            return d;
        }
        ++d.rejected;
    }
}

inline SampleBatch sample_initial(std::size_t n, std::uint64_t seed, const ModelParams& p) {
    p.validate();
    if (n == 0) throw ParameterError("sample_initial: n must be >= 1");
    SampleBatch b;
    b.seed = seed;
    b.requested = n;
    b.positions.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const SampleDraw d = sample_one(seed, k, p);
        b.positions.push_back(d.r0);
        b.rejected += d.rejected;
    }
    return b;
}

inline double empirical_rejection_rate(const SampleBatch& b) {
    const std::size_t total = b.rejected + b.positions.size();
    if (total == 0) throw DomainError("empirical_rejection_rate: empty batch");
    return static_cast<double>(b.rejected) / static_cast<double>(total);
}

inline void write_batch_csv(std::ostream& os, const SampleBatch& b) {
    const auto old = os.precision(17);
    os << "x0,y0,z0\n";
    for (const auto& r : b.positions) os << r.x << ',' << r.y << ',' << r.z << '\n';
    os.precision(old);
}

}  // namespace bohm
