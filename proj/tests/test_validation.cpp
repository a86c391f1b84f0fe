#include <sstream>

#include <gtest/gtest.h>

#include "bohm/validation.hpp"

using namespace bohm;

namespace {

ValidationOptions quick() {
    ValidationOptions o;
    o.drift_trajectories = 40;
    o.sandwich_trajectories = 100;
    o.oracle_trajectories = 5;
    o.sampler_n = 20000;
    o.lambert_points = 2000;
    return o;
}

}  // namespace

TEST(Validation, AllChecksPass) {
    const auto checks = run_validation(ModelParams{}, quick());
    for (const auto& c : checks) EXPECT_TRUE(c.passed) << c.name << " value " << c.value;
    EXPECT_TRUE(all_passed(checks));
    std::ostringstream os;
    write_validation_table(os, checks);
    EXPECT_NE(os.str().find("PASS  lambert_roundtrip"), std::string::npos);
}

TEST(Validation, LooseIntegratorIsCaught) {
    auto opt = quick();
    opt.drift_rtol_override = 1e-3;
    const auto checks = run_validation(ModelParams{}, opt);
    EXPECT_FALSE(all_passed(checks));
    for (const auto& c : checks) {
        if (c.name == "invariant_drift") {
            EXPECT_FALSE(c.passed);
        }
    }
}

TEST(Validation, WavefunctionChecks) {
    EXPECT_LT(schrodinger_residual(), 1e-5);
    EXPECT_LT(propagator_mismatch(), 1e-8);
}
