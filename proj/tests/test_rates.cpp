#include <gtest/gtest.h>

#include "polykin/rates.hpp"

using namespace polykin;

namespace {

DepolyProfile linear(double d0, double alpha) { return {LinearIncreasing{d0, alpha}}; }
DepolyProfile decaying(double d_inf, double C, int n) { return {DecayingInverse{d_inf, C, n}}; }
FragProfile uniform_constant(double b) { return {ConstantRate{b}, UniformKernel{}}; }

} // namespace

TEST(Rates, EvalD) {
    EXPECT_DOUBLE_EQ(eval_d(linear(0.5, 1), 0.75), 1.25);
    EXPECT_DOUBLE_EQ(eval_d(decaying(0.2, 1, 2), 0.0), 1.2);
    EXPECT_DOUBLE_EQ(eval_d(decaying(0.2, 1, 2), 1.0), 0.45);
    EXPECT_DOUBLE_EQ(d_infimum(decaying(0.2, 1, 2)), 0.2);
}

TEST(Rates, EvalDInverse) {
    EXPECT_DOUBLE_EQ(eval_d_inverse(linear(0.5, 1), 1.25), 0.75);
    EXPECT_NEAR(eval_d_inverse(decaying(0.2, 1, 2), 0.45), 1.0, 1e-14);
    try {
        eval_d_inverse(decaying(0.2, 1, 2), 0.1);
        FAIL() << "expected OutOfRangeError";
    } catch (const OutOfRangeError& e) {
        EXPECT_EQ(e.bound(), OutOfRangeError::Bound::Lower);
    }
    EXPECT_THROW(eval_d_inverse(decaying(0.2, 1, 2), 1.3), OutOfRangeError);
}

TEST(Rates, InverseRoundTrip) {
    const auto d = decaying(0.2, 1.0, 3);
    for (double x : {0.0, 0.1, 1.0, 7.5, 40.0}) EXPECT_NEAR(eval_d_inverse(d, eval_d(d, x)), x, 1e-9 * (1 + x));
}

TEST(Rates, KernelPartialMoment) {
    const auto f = uniform_constant(1.0);
    EXPECT_DOUBLE_EQ(kernel_partial_moment(f, 2.0, 2.0, 0), 1.0);
    EXPECT_DOUBLE_EQ(kernel_partial_moment(f, 2.0, 2.0, 1), 0.5);
    EXPECT_DOUBLE_EQ(kernel_partial_moment(f, 2.0, 1.0, 0), 0.5);
}

TEST(Rates, ACoefficient) {
    const auto f = uniform_constant(1.0);
    for (double x : {0.3, 1.0, 12.0}) {
        EXPECT_NEAR(a_coefficient(f, x, 2), 1.0 / 3.0, 1e-15);
        EXPECT_EQ(a_coefficient(f, x, 1), 0.0);
        EXPECT_DOUBLE_EQ(a_coefficient(f, x, 0), -1.0);
    }
}

TEST(Rates, NucleationIndicatorIsStrict) {
    const NucleationSpec n{1, 1};
    EXPECT_EQ(nucleation_flux(n, 1.0, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(nucleation_flux(n, 1.5, 1.0), 1.5);
    EXPECT_EQ(nucleation_flux({0, 1}, 3.0, 1.0), 0.0);
    EXPECT_THROW(check_nucleation({2, 1}), ValidationError);
    EXPECT_THROW(check_nucleation({1, 0}), ValidationError);
}

TEST(Rates, ValidateIncreasing) {
    const RateModel m{linear(0.5, 1), uniform_constant(0.5), {1, 2}};
    const auto r = validate_assumptions(m, Regime::Increasing);
    EXPECT_TRUE(r.all_pass());
    EXPECT_DOUBLE_EQ(r.alpha, 1.0);
    EXPECT_DOUBLE_EQ(r.beta, 1.0);
    EXPECT_DOUBLE_EQ(r.B_m, 0.5);
}

TEST(Rates, ValidateDecreasing) {
    const RateModel m{decaying(0.2, 1, 2), {SaturatedPower{1, 1, 10}, UniformKernel{}}, {0, 1}};
    const auto r = validate_assumptions(m, Regime::DecreasingWithFragmentation);
    EXPECT_TRUE(r.all_pass());
    EXPECT_NEAR(r.c, 1.0 / 3.0, 1e-12);
    EXPECT_DOUBLE_EQ(r.gamma, 1.0);
}

TEST(Rates, RegimeMismatchFailsOnMonotonicity) {
    const RateModel m{linear(0.5, 1), uniform_constant(0.5), {0, 1}};
    const auto r = validate_assumptions(m, Regime::DecreasingWithFragmentation);
    EXPECT_FALSE(r.all_pass());
    ASSERT_NE(r.first_failure(), nullptr);
    EXPECT_NE(r.first_failure()->label.find("decreasing"), std::string::npos);
}

TEST(Rates, ProfileChecks) {
    EXPECT_THROW(check_profile(linear(-0.1, 1)), ValidationError);
    EXPECT_THROW(check_profile(linear(0.1, 0)), ValidationError);
    EXPECT_THROW(check_profile(decaying(0.0, 1, 2)), ValidationError);
    EXPECT_NO_THROW(check_profile(decaying(0.2, 1, 2)));
}
