#pragma once

// Arrival-time statistics: the closed-form spin up law, Monte Carlo
// ensembles for both spin cases, histograms and goodness-of-fit.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bohm/error.hpp"
#include "bohm/model.hpp"
#include "bohm/sampling.hpp"
#include "bohm/special_functions.hpp"
#include "bohm/trajectories.hpp"

namespace bohm {

// ---------------------------------------------------------------------------
// Spin up closed form

/// Arrival density of the spin up ensemble, normalised on 0 < Z0 < L.
inline double pi_up_density(double tau, const ModelParams& p) {
    if (!(tau > 0.0)) return 0.0;
    const double L = p.detector_L;
    const double u = 1.0 + tau * tau;
    const double pref = 4.0 * L * L * L / (lambda0(p) * std::sqrt(std::numbers::pi));
    return pref * tau * std::exp(-L * L / u) / (u * u * std::sqrt(u));
}

/// P(tau <= t): the Born mass of L / sqrt(1 + t^2) <= Z0 < L over lambda0.
inline double pi_up_cdf(double t, const ModelParams& p) {
    if (!(t > 0.0)) return 0.0;
    const double w = p.detector_L / std::sqrt(1.0 + t * t);
    return 1.0 - born_mass_below(w) / lambda0(p);
}

/// <tau^mu> of the spin up law for mu in {1, 2}; higher moments diverge.
inline double moments_up(const ModelParams& p, int mu) {
    p.validate();
    if (mu > 2) {
        throw DivergentMomentError("moments_up: <tau^" + std::to_string(mu) +
                                   "> diverges (density tail ~ tau^-4)");
    }
    if (mu < 1) throw ParameterError("moments_up: order must be 1 or 2");
    const double L = p.detector_L;
    const double c = 4.0 * L * L * L / (3.0 * lambda0(p) * std::sqrt(std::numbers::pi));
    if (mu == 1) return c * kummer_1f1(1.0, 2.5, -L * L);
    return 2.0 * c * kummer_1f1(0.5, 2.5, -L * L);
}

inline double std_up(const ModelParams& p) {
    const double m1 = moments_up(p, 1);
    return std::sqrt(moments_up(p, 2) - m1 * m1);
}

// ---------------------------------------------------------------------------
// Histograms and goodness-of-fit

struct HistogramPolicy {
    enum class Kind { FreedmanDiaconis, FixedCount, FixedWidth };
    Kind kind = Kind::FreedmanDiaconis;
    double value = 0.0;  ///< bin count or bin width

    static HistogramPolicy freedman_diaconis() { return {}; }
    static HistogramPolicy count(std::size_t n) { return {Kind::FixedCount, static_cast<double>(n)}; }
    static HistogramPolicy width(double w) { return {Kind::FixedWidth, w}; }
};

struct Histogram {
    std::vector<double> edges;
    std::vector<std::size_t> counts;

    std::size_t total() const {
        std::size_t t = 0;
        for (auto c : counts) t += c;
        return t;
    }
    /// Counts divided by (total * width).
    std::vector<double> density() const {
        std::vector<double> d(counts.size());
        const double n = static_cast<double>(total());
        for (std::size_t i = 0; i < counts.size(); ++i) {
            d[i] = static_cast<double>(counts[i]) / (n * (edges[i + 1] - edges[i]));
        }
        return d;
    }
};

namespace detail {

// Linear-interpolation quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& v, double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= v.size()) return v.back();
    const double f = pos - static_cast<double>(i);
    return v[i] + f * (v[i + 1] - v[i]);
}

}  // namespace detail

inline Histogram histogram(const std::vector<double>& values, HistogramPolicy policy = {}) {
    if (values.empty()) throw DomainError("histogram: empty input");
    std::vector<double> v = values;
    std::sort(v.begin(), v.end());
    const double lo = v.front();
    const double hi = v.back();
    Histogram h;
    if (hi == lo) {
        h.edges = {lo - 0.5, lo + 0.5};
        h.counts = {v.size()};
        return h;
    }
    std::size_t bins = 1;
    switch (policy.kind) {
        case HistogramPolicy::Kind::FreedmanDiaconis: {
            const double iqr = detail::quantile_sorted(v, 0.75) - detail::quantile_sorted(v, 0.25);
            const double w = 2.0 * iqr / std::cbrt(static_cast<double>(v.size()));
            bins = w > 0.0 ? static_cast<std::size_t>(std::ceil((hi - lo) / w)) : 1;
            break;
        }
        case HistogramPolicy::Kind::FixedCount:
            if (!(policy.value >= 1.0)) throw ParameterError("histogram: bin count must be >= 1");
            bins = static_cast<std::size_t>(policy.value);
            break;
        case HistogramPolicy::Kind::FixedWidth:
            if (!(policy.value > 0.0)) throw ParameterError("histogram: bin width must be > 0");
            bins = static_cast<std::size_t>(std::ceil((hi - lo) / policy.value));
            break;
    }
    bins = std::clamp<std::size_t>(bins, 1, 1'000'000);
    const double width = policy.kind == HistogramPolicy::Kind::FixedWidth
                             ? policy.value
                             : (hi - lo) / static_cast<double>(bins);
    h.edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + width * static_cast<double>(i);
    if (policy.kind != HistogramPolicy::Kind::FixedWidth) h.edges.back() = hi;
    h.counts.assign(bins, 0);
    for (double x : v) {
        auto i = static_cast<std::size_t>((x - lo) / width);
        if (i >= bins) i = bins - 1;
        ++h.counts[i];
    }
    return h;
}

/// sup |F_n - F| over the sample.
template <class Cdf>
double ks_statistic(const std::vector<double>& values, Cdf&& cdf) {
    if (values.empty()) throw DomainError("ks_statistic: empty input");
    std::vector<double> v = values;
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double d = 0.0;
    // Tied values form one jump of the empirical CDF; the model side is
    // compared through its left limit so that atoms are handled too.
    for (std::size_t i = 0; i < v.size();) {
        std::size_t j = i + 1;
        while (j < v.size() && v[j] == v[i]) ++j;
        const double f = cdf(v[i]);
        const double f_left = cdf(std::nextafter(v[i], -std::numeric_limits<double>::infinity()));
        d = std::max({d, static_cast<double>(j) / n - f, f_left - static_cast<double>(i) / n});
        i = j;
    }
    return std::clamp(d, 0.0, 1.0);
}

/// Two-sample KS distance between empirical distributions.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw DomainError("ks_two_sample: empty input");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

// ---------------------------------------------------------------------------
// Ensembles

struct ArrivalRecord {
    Position3 r0;
    double tau = 0.0;
    SpinCase spin = SpinCase::Up;
    int crossings = 1;
    double h_drift = 0.0;           ///< up-down only
    double t_s = 0.0;               ///< up-down only
    double envelope_excess = 0.0;   ///< up-down only
};

struct EnsembleSummary {
    SpinCase spin = SpinCase::Up;
    ModelParams params;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::size_t rejected = 0;
    double mean_tau = 0.0;
    double std_tau = 0.0;  ///< population standard deviation
    double max_tau = 0.0;
    double bound = 0.0;    ///< tau_max_bound(params)
    double max_h_drift = 0.0;
    Histogram histogram;
};

struct EnsembleOptions {
    unsigned threads = 0;  ///< 0 selects std::thread::hardware_concurrency()
    HistogramPolicy bins{};
    /// Called with the number of finished records, from worker threads,
    /// serialised, roughly every 1% of the run.
    std::function<void(std::size_t done, std::size_t total)> progress;
};

struct EnsembleResult {
    std::vector<ArrivalRecord> records;
    EnsembleSummary summary;

    std::vector<double> taus() const {
        std::vector<double> t;
        t.reserve(records.size());
        for (const auto& r : records) t.push_back(r.tau);
        return t;
    }
};

/// First arrival of a single initial condition.
inline ArrivalRecord arrival_record(const Position3& r0, SpinCase spin, const ModelParams& p) {
    ArrivalRecord rec;
    rec.r0 = r0;
    rec.spin = spin;
    if (spin == SpinCase::Up) {
        rec.tau = spin_up_arrival(r0, p);
        return rec;
    }
    UpDownOptions opt;
    opt.rtol = p.tol.ode_rtol;
    const UpDownResult res = integrate_updown(r0, p, opt);
    rec.tau = res.first->t;
    rec.crossings = res.diag.crossings;
    rec.h_drift = res.diag.max_h_drift;
    rec.t_s = res.env.t_s;
    rec.envelope_excess = res.diag.max_envelope_excess;
    return rec;
}

inline unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

/// Runs n independent trajectories. Record k depends only on (seed, k), and
/// the reduction runs in index order, so output does not depend on threads.
inline EnsembleResult run_ensemble(SpinCase spin, std::size_t n, std::uint64_t seed,
                                   const ModelParams& p, const EnsembleOptions& opt = {}) {
    p.validate();
    if (n == 0) throw ParameterError("run_ensemble: n must be >= 1");
    EnsembleResult out;
    out.records.resize(n);
    std::vector<std::size_t> rejected(n, 0);

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::atomic<bool> failed{false};
    std::mutex mu;
    std::size_t fail_index = std::numeric_limits<std::size_t>::max();
    std::string fail_msg;
    const std::size_t tick = std::max<std::size_t>(1, n / 100);

    auto worker = [&] {
        for (;;) {
            if (failed.load(std::memory_order_relaxed)) return;
            const std::size_t k = next.fetch_add(1, std::memory_order_relaxed);
            if (k >= n) return;
            const SampleDraw d = sample_one(seed, k, p);
            rejected[k] = d.rejected;
            try {
                out.records[k] = arrival_record(d.r0, spin, p);
            } catch (const Error& e) {
                std::ostringstream os;
                os.precision(17);
                os << e.what() << " [record " << k << ", seed " << seed << ", r0 = (" << d.r0.x
                   << ", " << d.r0.y << ", " << d.r0.z << ")]";
                std::lock_guard lock(mu);
                if (k < fail_index) {
                    fail_index = k;
                    fail_msg = os.str();
                }
                failed = true;
                return;
            }
            const std::size_t finished = done.fetch_add(1, std::memory_order_relaxed) + 1;
            if (opt.progress && (finished % tick == 0 || finished == n)) {
                std::lock_guard lock(mu);
                opt.progress(finished, n);
            }
        }
    };
    const unsigned nt = std::min<std::size_t>(resolve_threads(opt.threads), n);
    if (nt <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nt);
        for (unsigned i = 0; i < nt; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failed) throw IntegrationError("run_ensemble: " + fail_msg);

    EnsembleSummary& s = out.summary;
    s.spin = spin;
    s.params = p;
    s.n = n;
    s.seed = seed;
    s.bound = tau_max_bound(p);
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sum += out.records[k].tau;
        s.rejected += rejected[k];
        s.max_tau = std::max(s.max_tau, out.records[k].tau);
        s.max_h_drift = std::max(s.max_h_drift, out.records[k].h_drift);
    }
    s.mean_tau = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& r : out.records) ss += (r.tau - s.mean_tau) * (r.tau - s.mean_tau);
    s.std_tau = std::sqrt(ss / static_cast<double>(n));
    s.histogram = histogram(out.taus(), opt.bins);
    return out;
}

inline void write_records_csv(std::ostream& os, const std::vector<ArrivalRecord>& records) {
    const auto old = os.precision(17);
    os << "x0,y0,z0,tau,crossings\n";
    for (const auto& r : records) {
        os << r.r0.x << ',' << r.r0.y << ',' << r.r0.z << ',' << r.tau << ',' << r.crossings << '\n';
    }
    os.precision(old);
}

}  // namespace bohm
