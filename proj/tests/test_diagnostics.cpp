#include <cmath>

#include <gtest/gtest.h>

#include "polykin/diagnostics.hpp"

using namespace polykin;

namespace {

const DepolyProfile d_lin{LinearIncreasing{0.5, 1.0}};

TimeSeries synthetic(double M, double t_end, double dt, auto&& fill) {
    TimeSeries ts;
    ts.M = M;
    for (double t = 0.0; t <= t_end + 1e-12; t += dt) {
        Sample s;
        s.t = t;
        fill(s);
        ts.samples.push_back(s);
    }
    return ts;
}

RateModel nucleating(double d0, int i0) { return {{LinearIncreasing{d0, 1.0}}, {ConstantRate{0.0}, UniformKernel{}}, {1, i0}}; }

} // namespace

TEST(Diagnostics, PredictXbar) {
    auto c = predict_xbar(2.0, 1.0, d_lin);
    EXPECT_NEAR(c.xbar, 0.75, 1e-12);
    EXPECT_NEAR(c.Vbar, 1.25, 1e-12);
    c = predict_xbar(5.0, 2.0, DepolyProfile{LinearIncreasing{1.0, 2.0}});
    EXPECT_NEAR(c.xbar, 1.0, 1e-12);
    EXPECT_NEAR(c.Vbar, 3.0, 1e-12);
    c = predict_xbar(4.0, 1.0, [](double x) { return 1.0 + x + 0.1 * x * x; });
    EXPECT_NEAR(c.xbar, (-2.0 + std::sqrt(5.2)) / 0.2, 1e-10);
    EXPECT_LE(std::abs(1.0 * c.xbar + 1.0 + c.xbar + 0.1 * c.xbar * c.xbar - 4.0), 1e-12 * 4.0);
    EXPECT_THROW(predict_xbar(0.4, 1.0, d_lin), Error);
}

TEST(Diagnostics, WassersteinToDirac) {
    SystemState s(SizeGrid(6.0, 3), 0.0);
    s.u[1] = 1.0;  // centre 3, u dx = 2
    EXPECT_NEAR(wasserstein_to_dirac(s, 1.0, 2), 2.0 * std::sqrt(2.0), 1e-15);
    EXPECT_EQ(wasserstein_to_dirac(s, 3.0, 2), 0.0);
    EXPECT_EQ(wasserstein_to_dirac(s, 3.0, 1), 0.0);
    EXPECT_THROW(wasserstein_to_dirac(s, 3.0, 3), std::invalid_argument);
}

TEST(Diagnostics, WassersteinIdentity) {
    SystemState s(SizeGrid(5.0, 500), 0.0);
    for (std::size_t i = 0; i < s.u.size(); ++i) s.u[i] = std::exp(-std::pow(s.grid.center(i) - 2.0, 2));
    const double xbar = 1.7;
    double second = 0.0;
    for (std::size_t i = 0; i < s.u.size(); ++i) second += std::pow(s.grid.center(i) - xbar, 2) * s.u[i] * s.grid.dx();
    const double w2 = wasserstein_to_dirac(s, xbar, 2);
    EXPECT_NEAR(w2 * w2, second, 1e-12 * second);
}

TEST(Diagnostics, WassersteinBetweenPointSets) {
    PointMeasure a{{0.0, 1.0}, {1.0, 1.0}};
    PointMeasure b{{2.0, 3.0}, {1.0, 1.0}};
    EXPECT_NEAR(wasserstein_1d(a, b, 2), 2.0 * std::sqrt(2.0), 1e-14);
    EXPECT_NEAR(wasserstein_1d(a, b, 1), 4.0, 1e-14);
    PointMeasure c{{0.0}, {3.0}};
    EXPECT_THROW(wasserstein_1d(a, c, 2), std::invalid_argument);
}

TEST(Diagnostics, EntropyH) {
    const SystemState vacuum(SizeGrid(1.0, 4), 0.5);
    EXPECT_EQ(entropy_H(vacuum, d_lin).H, 0.0);
    SystemState s(SizeGrid(4.0, 2), 1.0);
    s.u[0] = 0.5;  // centre 1, u dx = 1 -> k(1) = 1
    EXPECT_NEAR(entropy_H(s, d_lin).H, 1.0 + 0.375, 1e-15);
    s = SystemState(SizeGrid(8.0, 2), 1.0);
    s.u[0] = 0.25;  // centre 2, u dx = 1 -> k(2) = 3
    EXPECT_NEAR(entropy_H(s, d_lin).H, 3.375, 1e-15);
    s.V = 0.2;
    EXPECT_TRUE(entropy_H(s, d_lin).clamped);
}

TEST(Diagnostics, FitRatesRecoverTheory) {
    {
        const auto ts = synthetic(3.0, 200.0, 1.0, [](Sample& s) {
            s.rho = s.t;
            s.V = s.t > 0 ? 1.0 + 2.0 / s.t : 3.0;
        });
        const auto f = fit_rates(ts, nucleating(1.0, 2), Theorem::T24_d0pos);
        ASSERT_EQ(f.size(), 2u);
        EXPECT_NEAR(f[0].theory, 1.0, 1e-15);
        EXPECT_NEAR(f[1].theory, 2.0, 1e-15);
        EXPECT_NEAR(f[0].fitted, 1.0, 1e-6);
        EXPECT_NEAR(f[1].fitted, 2.0, 1e-6);
    }
    {
        const RateModel m{{LinearIncreasing{0.0, 1.0}}, {ConstantRate{0.0}, UniformKernel{}}, {1, 1}};
        const auto ts = synthetic(2.0, 200.0, 1.0, [](Sample& s) {
            s.rho = 2.0 * std::sqrt(s.t);
            s.V = s.t > 0 ? 1.0 / std::sqrt(s.t) : 2.0;
        });
        const auto f = fit_rates(ts, m, Theorem::T24_d0zero);
        EXPECT_NEAR(f[0].theory, 2.0, 1e-15);
        EXPECT_NEAR(f[1].theory, 1.0, 1e-15);
        EXPECT_NEAR(f[0].fitted, 2.0, 1e-6);
        EXPECT_NEAR(f[1].fitted, 1.0, 1e-6);
    }
    {
        const auto ts = synthetic(3.0, 200.0, 1.0, [](Sample& s) {
            s.rho = 1.0 + s.t;
            s.V = 1.0 + 2.0 / (1.0 + s.t);
        });
        const auto f = fit_rates(ts, nucleating(1.0, 1), Theorem::L39);
        EXPECT_NEAR(f[0].theory, 2.0, 1e-15);
        EXPECT_NEAR(f[0].fitted, 2.0, 1e-6);
    }
}

TEST(Diagnostics, FitRatesWindowTooShort) {
    const auto ts = synthetic(3.0, 1.0, 0.5, [](Sample& s) { s.rho = 1.0, s.V = 2.0; });
    EXPECT_THROW(fit_rates(ts, nucleating(1.0, 1), Theorem::L39), Error);
}

TEST(Diagnostics, M2Decay) {
    const auto vacuum = synthetic(1.0, 5.0, 0.5, [](Sample&) {});
    EXPECT_TRUE(m2_decay_check(vacuum, Regime::Increasing).pass);
    EXPECT_THROW(m2_decay_check(vacuum, Regime::DecreasingWithFragmentation), Error);
    const auto decaying = synthetic(1.0, 5.0, 0.1, [](Sample& s) { s.M2 = std::exp(-2.0 * s.t); });
    const auto r = m2_decay_check(decaying, Regime::Increasing);
    EXPECT_TRUE(r.pass);
    EXPECT_NEAR(r.decay_constant, 2.0, 1e-6);
}

TEST(Diagnostics, LinearRegression) {
    const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
    const auto f = linear_regression(x, y);
    EXPECT_NEAR(f.slope, 2.0, 1e-14);
    EXPECT_NEAR(f.intercept, 1.0, 1e-14);
    EXPECT_NEAR(f.r2, 1.0, 1e-14);
}
