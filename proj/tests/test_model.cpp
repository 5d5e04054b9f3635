#include "beltgap/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace beltgap;

namespace {

PhysicalParams physical(double rho, double P, double S0, double sigma, double Phi, double V) {
    PhysicalParams p;
    p.linear_density = rho;
    p.tension = P;
    p.base_stiffness = S0;
    p.modulation = sigma;
    p.period = Phi;
    p.speed = V;
    return p;
}

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

TEST(Nondimensionalize, TrivialString) {
    const auto bp = nondimensionalize(physical(1, 1, 0, 0, kTwoPi, 0), 0);
    EXPECT_EQ(bp.v, 0.0);
    EXPECT_EQ(bp.s, 0.0);
    EXPECT_EQ(bp.sigma, 0.0);
    EXPECT_EQ(bp.M, 0);
}

TEST(Nondimensionalize, UnitPeriodGivesStiffnessOverTension) {
    const auto bp = nondimensionalize(physical(1, 1, 0.1, 0.5, kTwoPi, 0.5), 3);
    EXPECT_NEAR(bp.v, 0.5, 1e-15);
    EXPECT_NEAR(bp.s, 0.1, 1e-15);
    EXPECT_EQ(bp.sigma, 0.5);
    EXPECT_EQ(bp.M, 3);
}

TEST(Nondimensionalize, HeavyStringHalvesWaveSpeed) {
    const auto bp = nondimensionalize(physical(4, 1, 0.1, 0.2, kTwoPi, 0.25));
    EXPECT_NEAR(bp.v, 0.5, 1e-15);
    EXPECT_EQ(bp.M, 4);
}

TEST(Nondimensionalize, MatchesDefinitionForGeneralPeriod) {
    const auto bp = nondimensionalize(physical(2.0, 3.0, 0.7, 0.1, 1.3, 0.4));
    const double c = std::sqrt(3.0 / 2.0);
    EXPECT_NEAR(bp.v, 0.4 / c, 1e-15);
    EXPECT_NEAR(bp.s, 0.7 * 1.3 * 1.3 / (4.0 * std::numbers::pi * std::numbers::pi * 3.0), 1e-15);
}

TEST(Nondimensionalize, ScaleInvariantInDensityAndTension) {
    const auto a = nondimensionalize(physical(1.5, 2.0, 0.3, 0.2, 4.0, 0.6));
    for (double lambda : {0.01, 0.5, 7.0, 1e4}) {
        const auto b = nondimensionalize(physical(1.5 * lambda, 2.0 * lambda, 0.3 * lambda, 0.2, 4.0, 0.6));
        EXPECT_NEAR(b.v, a.v, 1e-14);
        EXPECT_NEAR(b.s, a.s, 1e-14 * a.s);
    }
    // With S0 fixed, only P changes s; v is unchanged when rho and P scale together.
    const auto c = nondimensionalize(physical(3.0, 4.0, 0.3, 0.2, 4.0, 0.6));
    EXPECT_NEAR(c.v, a.v, 1e-14);
}

TEST(Nondimensionalize, StiffnessGrowsWithPeriodSquared) {
    double last = -1.0;
    for (double Phi : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        const double s = nondimensionalize(physical(1, 1, 0.2, 0, Phi, 0)).s;
        EXPECT_GT(s, last);
        last = s;
    }
    const double s1 = nondimensionalize(physical(1, 1, 0.2, 0, 1.0, 0)).s;
    const double s3 = nondimensionalize(physical(1, 1, 0.2, 0, 3.0, 0)).s;
    EXPECT_NEAR(s3 / s1, 9.0, 1e-12);
}

TEST(Nondimensionalize, Errors) {
    EXPECT_THROW(nondimensionalize(physical(1, 1, 0, 0, kTwoPi, 1.0)), SupercriticalSpeed);
    EXPECT_THROW(nondimensionalize(physical(4, 1, 0, 0, kTwoPi, 0.6)), SupercriticalSpeed);
    EXPECT_THROW(nondimensionalize(physical(0, 1, 0, 0, kTwoPi, 0)), InvalidParameter);
    EXPECT_THROW(nondimensionalize(physical(1, -1, 0, 0, kTwoPi, 0)), InvalidParameter);
    EXPECT_THROW(nondimensionalize(physical(1, 1, 0, 0, 0.0, 0)), InvalidParameter);
    EXPECT_THROW(nondimensionalize(physical(1, 1, -0.1, 0, kTwoPi, 0)), InvalidParameter);
    EXPECT_THROW(nondimensionalize(physical(1, 1, 0.1, -0.1, kTwoPi, 0)), InvalidParameter);
    try {
        nondimensionalize(physical(0, 1, 0, 0, kTwoPi, 0));
        FAIL();
    } catch (const SupercriticalSpeed&) {
        FAIL() << "nonpositive density must not be reported as supercritical";
    } catch (const InvalidParameter&) {
    }
}

TEST(Validate, ReferenceParameterSetIsClean) {
    const auto r = validate({0.5, 0.1, 0.5, 3});
    EXPECT_TRUE(r.valid());
    EXPECT_TRUE(r.warnings.empty());
}

TEST(Validate, CriticalSpeedIsHardViolation) {
    const BeltParams bp{1.0, 0.1, 0.0, 1};
    const auto r = validate(bp);
    EXPECT_FALSE(r.valid());
    ASSERT_EQ(r.violations.size(), 1u);
    EXPECT_NE(r.violations[0].find("critical"), std::string::npos);
    EXPECT_THROW(require_valid(bp), SupercriticalSpeed);
}

TEST(Validate, TruncationWarnings) {
    auto r = validate({0.5, 1.5, 0.5, 3});
    EXPECT_TRUE(r.valid());
    EXPECT_EQ(r.warnings.size(), 1u);
    r = validate({0.5, 0.1, 1.0, 3});
    EXPECT_TRUE(r.valid());
    EXPECT_EQ(r.warnings.size(), 1u);
    r = validate({0.5, 0.1, 0.5, 0});
    EXPECT_TRUE(r.valid());
    ASSERT_EQ(r.warnings.size(), 1u);
    EXPECT_NE(r.warnings[0].find("M = 0"), std::string::npos);
}

TEST(Validate, NegativeValuesAreViolations) {
    EXPECT_FALSE(validate({0.5, -0.1, 0.5, 3}).valid());
    EXPECT_FALSE(validate({0.5, 0.1, -0.5, 3}).valid());
    EXPECT_FALSE(validate({-0.1, 0.1, 0.5, 3}).valid());
    EXPECT_FALSE(validate({0.5, 0.1, 0.5, -1}).valid());
    EXPECT_FALSE(validate({NAN, 0.1, 0.5, 3}).valid());
    EXPECT_THROW(require_valid({0.5, -0.1, 0.5, 3}), InvalidParameter);
}

TEST(Config, NondimensionalKeys) {
    std::istringstream in("# comment\n v = 0.5\ns=0.1\n\nsigma = 0.5 \nM = 3\n");
    const auto bp = belt_params_from_config(parse_config(in));
    EXPECT_EQ(bp, (BeltParams{0.5, 0.1, 0.5, 3}));
}

TEST(Config, PhysicalKeys) {
    std::istringstream in("rho = 4\nP = 1\nS0 = 0.1\nsigma = 0.2\nV = 0.25\n");
    const auto bp = belt_params_from_config(parse_config(in));
    EXPECT_NEAR(bp.v, 0.5, 1e-15);
    EXPECT_NEAR(bp.s, 0.1, 1e-15);
    EXPECT_EQ(bp.sigma, 0.2);
}

TEST(Config, Errors) {
    std::istringstream bad_line("v 0.5\n");
    EXPECT_THROW(parse_config(bad_line), InvalidParameter);
    std::istringstream bad_number("v = fast\n");
    EXPECT_THROW(belt_params_from_config(parse_config(bad_number)), InvalidParameter);
    std::istringstream bad_m("M = 2.5\n");
    EXPECT_THROW(belt_params_from_config(parse_config(bad_m)), InvalidParameter);
    std::istringstream mixed("v = 0.5\nrho = 1\n");
    EXPECT_THROW(belt_params_from_config(parse_config(mixed)), InvalidParameter);
    EXPECT_THROW(load_config("/nonexistent/beltgap.cfg"), InvalidParameter);
}
