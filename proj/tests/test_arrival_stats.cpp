#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include "bohm/arrival_stats.hpp"

using namespace bohm;

namespace {

ModelParams params(double omega, double L) {
    ModelParams p;
    p.omega = omega;
    p.detector_L = L;
    return p;
}

// <tau^mu> as an average over the Born density of Z0, tau = sqrt(L^2 - Z0^2)/Z0.
double moment_over_start(double L, int mu) {
    boost::math::quadrature::tanh_sinh<double> ts;
    // tau^mu z^2 = (L^2 - z^2)^(mu/2) z^(2 - mu)
    auto f = [&](double z) {
        const double w = (L - z) * (L + z);
        const double g = mu == 1 ? std::sqrt(w) * z : w;
        return g * 4.0 / std::sqrt(std::numbers::pi) * std::exp(-z * z);
    };
    return ts.integrate(f, 0.0, std::min(L, 40.0), 1e-14) / born_mass_below(L);
}

}  // namespace

TEST(SpinUpLaw, MomentsMatchAverageOverStart) {
    for (double L : {2.0, 10.0, 50.0, 100.0}) {
        const auto p = params(500, L);
        EXPECT_NEAR(moments_up(p, 1), moment_over_start(L, 1), 1e-10 * moments_up(p, 1)) << L;
        EXPECT_NEAR(moments_up(p, 2), moment_over_start(L, 2), 1e-10 * moments_up(p, 2)) << L;
    }
}

TEST(SpinUpLaw, ReferenceValuesAtFifty) {
    const auto p = params(500, 50);
    EXPECT_NEAR(moments_up(p, 1), 56.4077, 1e-3 * 56.4077);
    EXPECT_NEAR(std_up(p), 42.6283, 1e-3 * 42.6283);
}

TEST(SpinUpLaw, MeanGrowsLinearlyForLargeL) {
    // <tau> -> 2 L / sqrt(pi) as the wall-side tail of Z0 stops mattering.
    for (double L : {50.0, 100.0}) {
        EXPECT_NEAR(moments_up(params(1, L), 1) / L, 2.0 / std::sqrt(std::numbers::pi), 1e-3);
    }
}

TEST(SpinUpLaw, DivergentMomentsAreRejected) {
    const auto p = params(500, 50);
    EXPECT_THROW(moments_up(p, 3), DivergentMomentError);
    EXPECT_THROW(moments_up(p, 0), ParameterError);
}

TEST(SpinUpLaw, CdfIsIntegralOfDensity) {
    const auto p = params(500, 10);
    boost::math::quadrature::tanh_sinh<double> ts;
    for (double t : {0.5, 3.0, 10.0, 40.0}) {
        const double num = ts.integrate([&](double u) { return pi_up_density(u, p); }, 0.0, t, 1e-14);
        EXPECT_NEAR(pi_up_cdf(t, p), num, 1e-10) << t;
    }
    EXPECT_EQ(pi_up_cdf(0.0, p), 0.0);
    EXPECT_NEAR(pi_up_cdf(1e8, p), 1.0, 1e-12);
}

TEST(SpinUpLaw, TailFollowsInverseFourthPower) {
    const auto p = params(500, 10);
    const double c = 4.0 * 1000.0 / (lambda0(p) * std::sqrt(std::numbers::pi));
    EXPECT_NEAR(pi_up_density(1e4, p) * 1e16, c, 1e-5 * c);
}

TEST(Histogram, CountsAndDensityNormalise) {
    std::vector<double> v;
    for (int i = 0; i < 1000; ++i) v.push_back(std::sin(i) * 3.0);
    for (const auto policy : {HistogramPolicy::freedman_diaconis(), HistogramPolicy::count(17),
                              HistogramPolicy::width(0.25)}) {
        const Histogram h = histogram(v, policy);
        EXPECT_EQ(h.total(), v.size());
        EXPECT_EQ(h.edges.size(), h.counts.size() + 1);
        double mass = 0.0;
        const auto d = h.density();
        for (std::size_t i = 0; i < d.size(); ++i) mass += d[i] * (h.edges[i + 1] - h.edges[i]);
        EXPECT_NEAR(mass, 1.0, 1e-12);
        EXPECT_LE(h.edges.front(), -2.99);
        EXPECT_GE(h.edges.back(), 2.99);
    }
    EXPECT_EQ(histogram(v, HistogramPolicy::count(17)).counts.size(), 17u);
}

TEST(Histogram, DegenerateInput) {
    const Histogram h = histogram({2.0, 2.0, 2.0});
    ASSERT_EQ(h.counts.size(), 1u);
    EXPECT_EQ(h.counts[0], 3u);
    EXPECT_THROW(histogram({}), DomainError);
    EXPECT_THROW(histogram({1.0, 2.0}, HistogramPolicy::count(0)), ParameterError);
}

TEST(GoodnessOfFit, KsOfExactQuantilesIsOneOverN) {
    std::vector<double> v;
    const int n = 1000;
    for (int i = 0; i < n; ++i) v.push_back((i + 1.0) / n);
    const double d = ks_statistic(v, [](double x) { return std::clamp(x, 0.0, 1.0); });
    EXPECT_NEAR(d, 1.0 / n, 1e-12);
}

TEST(GoodnessOfFit, AtomsAreNotCountedTwice) {
    // Half the mass at 0 and half uniform on (0, 1).
    std::vector<double> v(500, 0.0);
    for (int i = 0; i < 500; ++i) v.push_back((i + 0.5) / 500.0);
    auto cdf = [](double x) { return x < 0.0 ? 0.0 : std::min(1.0, 0.5 + 0.5 * x); };
    EXPECT_LT(ks_statistic(v, cdf), 2e-3);
}

TEST(GoodnessOfFit, TwoSample) {
    EXPECT_EQ(ks_two_sample({1, 2, 3}, {1, 2, 3}), 0.0);
    EXPECT_EQ(ks_two_sample({1, 2}, {3, 4}), 1.0);
}

TEST(Ensemble, SpinUpMatchesClosedForm) {
    const auto p = params(500, 50);
    const auto res = run_ensemble(SpinCase::Up, 20000, 8, p);
    const double mean = moments_up(p, 1);
    EXPECT_NEAR(res.summary.mean_tau, mean, 4.0 * std_up(p) / std::sqrt(20000.0));
    EXPECT_LT(ks_statistic(res.taus(), [&](double t) { return pi_up_cdf(t, p); }), 0.015);
}

TEST(Ensemble, ThreadCountDoesNotChangeOutput) {
    const auto p = params(500, 20);
    EnsembleOptions one, many;
    one.threads = 1;
    many.threads = 4;
    const auto a = run_ensemble(SpinCase::UpDown, 300, 99, p, one);
    const auto b = run_ensemble(SpinCase::UpDown, 300, 99, p, many);
    for (std::size_t k = 0; k < 300; ++k) ASSERT_EQ(a.records[k].tau, b.records[k].tau);
    EXPECT_EQ(a.summary.mean_tau, b.summary.mean_tau);
    EXPECT_EQ(a.summary.histogram.counts, b.summary.histogram.counts);
}

TEST(Ensemble, SummaryAgreesWithRecords) {
    const auto p = params(500, 50);
    const auto res = run_ensemble(SpinCase::UpDown, 200, 5, p);
    double mx = 0.0;
    for (const auto& r : res.records) mx = std::max(mx, r.tau);
    EXPECT_EQ(res.summary.max_tau, mx);
    EXPECT_LE(res.summary.max_tau, res.summary.bound);
    EXPECT_EQ(res.summary.histogram.total(), 200u);
    std::ostringstream os;
    write_records_csv(os, res.records);
    EXPECT_EQ(os.str().rfind("x0,y0,z0,tau,crossings\n", 0), 0u);
}

TEST(Ensemble, ZeroTrajectoriesRejected) {
    EXPECT_THROW(run_ensemble(SpinCase::Up, 0, 1, params(500, 50)), ParameterError);
}
