#include <cmath>

#include <gtest/gtest.h>

#include "polykin/steady.hpp"

using namespace polykin;

namespace {

RateModel default_model() {
    return {{DecayingInverse{0.2, 1.0, 2}}, {SaturatedPower{1.0, 1.0, 10.0}, UniformKernel{}}, {0, 1}};
}

RateModel no_fragmentation() {
    return {{DecayingInverse{0.2, 1.0, 2}}, {ConstantRate{0.0}, UniformKernel{}}, {0, 1}};
}

double l1(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += std::abs(x);
    return acc;
}

} // namespace

TEST(Steady, RejectsVOutsideRange) {
    const auto m = default_model();
    EXPECT_THROW(assemble_generator(0.1, 50.0, 0.0, 100, m, SteadyPath::Direct), Error);
    EXPECT_THROW(assemble_generator(1.3, 50.0, 0.0, 100, m, SteadyPath::Direct), Error);
}

TEST(Steady, PureTransportTelescopes) {
    const auto p = assemble_generator(0.6, 20.0, 0.0, 400, no_fragmentation(), SteadyPath::Direct);
    std::vector<double> ones(p.n, 1.0);
    const auto AU = apply_generator(p, ones);
    double total = 0.0;
    for (double v : AU) total += v * p.h;
    const auto F = transport_fluxes(p, ones);
    EXPECT_NEAR(total, F.front() - F.back(), 1e-12);
}

TEST(Steady, FragmentationPartCreatesNoMass) {
    const auto m = default_model();
    const auto p = assemble_generator(0.6, 20.0, 0.0, 300, m, SteadyPath::Direct);
    auto q = p;
    std::fill(q.v_face.begin(), q.v_face.end(), 0.0);
    const auto A = dense_generator(q);
    for (std::size_t j = 0; j < q.n; ++j) {
        double mass = 0.0;
        for (std::size_t i = 0; i < q.n; ++i) mass += q.center(i) * A(i, j);
        EXPECT_NEAR(mass, 0.0, 1e-12 * q.center(j) * (1.0 + q.loss[j])) << "column " << j;
    }
}

TEST(Steady, OutflowTransportHasNegativeEigenvalue) {
    const auto m = no_fragmentation();
    const auto p = assemble_generator(0.6, 20.0, 0.0, 200, m, SteadyPath::Direct);
    try {
        const auto pair = principal_eigenpair(p, m);
        EXPECT_LT(pair.lambda, 0.0);
    } catch (const EigenConvergenceError& e) {
        EXPECT_LT(e.upper_bound(), 0.0);
    }
}

TEST(Steady, EigenpairResidualAndPositivity) {
    const auto m = default_model();
    const auto p = assemble_generator(0.7, 50.0, 0.0, 400, m, SteadyPath::Direct);
    const auto pair = principal_eigenpair(p, m);
    auto AU = apply_generator(p, pair.U);
    for (std::size_t i = 0; i < p.n; ++i) AU[i] -= pair.lambda * pair.U[i];
    EXPECT_LE(l1(AU), 1e-8 * l1(pair.U));
    double integral = 0.0;
    for (double u : pair.U) {
        EXPECT_GE(u, 0.0);
        integral += u * p.h;
    }
    EXPECT_NEAR(integral, 1.0, 1e-12);
}

TEST(Steady, LambdaPositiveNearTopOfRange) {
    const auto m = default_model();
    const auto p = assemble_generator(1.19, 50.0, 0.0, 400, m, SteadyPath::Direct);
    EXPECT_GT(principal_eigenpair(p, m).lambda, 0.0);
}

TEST(Steady, LambdaCurveIsDeterministic) {
    SteadyOptions opt;
    opt.n = 200;
    const LambdaCurve a(default_model(), opt), b(default_model(), opt);
    EXPECT_EQ(a.lambda(0.7), b.lambda(0.7));
    EXPECT_EQ(a.lambda(0.7), a.lambda(0.7));
}

TEST(Steady, NoFragmentationHasNoSteadyState) {
    SteadyOptions opt;
    opt.n = 200;
    opt.scan_points = 8;
    try {
        solve_steady(no_fragmentation(), opt, 2.0);
        FAIL() << "expected NoSignChangeError";
    } catch (const NoSignChangeError& e) {
        EXPECT_EQ(e.scan().size(), 8u);
        for (const auto& [V, lam] : e.scan()) EXPECT_LT(lam, 0.0);
    }
}

TEST(Steady, IncreasingDRejected) {
    RateModel m = default_model();
    m.d = {LinearIncreasing{0.5, 1.0}};
    SteadyOptions opt;
    opt.n = 100;
    EXPECT_THROW(solve_steady(m, opt, 2.0), ValidationError);
}

TEST(Steady, CoarseDirectSolve) {
    SteadyOptions opt;
    opt.n = 500;
    const auto r = solve_steady(default_model(), opt, 2.0);
    EXPECT_GT(r.Vbar, 0.2);
    EXPECT_LT(r.Vbar, 1.2);
    EXPECT_LE(std::abs(r.lambda), 1e-10);
    EXPECT_NEAR(r.Vbar + r.U.first_moment(), 2.0, 1e-9);
    for (double u : r.U.U) EXPECT_GE(u, 0.0);
}
