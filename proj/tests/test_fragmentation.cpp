#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "polykin/fragmentation.hpp"

using namespace polykin;

namespace {

FragProfile constant(double b) { return {ConstantRate{b}, UniformKernel{}}; }

double mass_moment(const SizeGrid& g, const std::vector<double>& r) {
    double acc = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) acc += g.center(i) * r[i] * g.dx();
    return acc;
}

double number_moment(const SizeGrid& g, const std::vector<double>& r) {
    double acc = 0.0;
    for (double v : r) acc += v * g.dx();
    return acc;
}

} // namespace

TEST(Fragmentation, ColumnsConserveMass) {
    const SizeGrid g(10.0, 256);
    const auto op = assemble(g, constant(1.0), true);
    for (std::size_t j = 0; j < g.size(); ++j) {
        double mass = 0.0;
        for (std::size_t i = 0; i <= j; ++i) mass += g.center(i) * op.gain(i, j);  // entries carry dx
        EXPECT_NEAR(mass, g.center(j) * op.loss[j], 1e-13 * g.center(j)) << "column " << j;
    }
}

TEST(Fragmentation, UnitMassInCellConservesMassAndDoublesCount) {
    const SizeGrid g(10.0, 256);
    const auto op = assemble(g, constant(1.0));
    for (std::size_t j : {1u, 10u, 100u, 255u}) {
        std::vector<double> u(g.size(), 0.0);
        u[j] = 1.0 / (g.center(j) * g.dx());
        const auto r = polykin::apply(op, u);
        EXPECT_NEAR(mass_moment(g, r), 0.0, 1e-14);
        // one extra fragment per split: net number rate B * (u_j dx)
        EXPECT_NEAR(number_moment(g, r), u[j] * g.dx(), 1e-12 * u[j] * g.dx()) << "column " << j;
    }
}

TEST(Fragmentation, ZeroRateGivesZeroOperator) {
    const SizeGrid g(5.0, 64);
    const auto op = assemble(g, constant(0.0));
    std::vector<double> u(g.size(), 1.0);
    for (double v : polykin::apply(op, u)) EXPECT_EQ(v, 0.0);
}

TEST(Fragmentation, FastPathMatchesDense) {
    const SizeGrid g(20.0, 512);
    const auto op = assemble(g, {SaturatedPower{1.0, 1.0, 10.0}, UniformKernel{}}, true);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> u(g.size());
    for (auto& v : u) v = U(rng);
    const auto fast = polykin::apply(op, u);
    const auto dense = apply_dense(op, u);
    double scale = 0.0;
    for (double v : dense) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(fast[i], dense[i], 1e-12 * scale);
}

TEST(Fragmentation, Linearity) {
    const SizeGrid g(8.0, 128);
    const auto op = assemble(g, constant(0.7));
    std::vector<double> a(g.size()), b(g.size()), ab(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        a[i] = std::exp(-g.center(i));
        b[i] = 1.0 / (1.0 + g.center(i));
        ab[i] = a[i] + b[i];
    }
    const auto ra = polykin::apply(op, a), rb = polykin::apply(op, b), rab = polykin::apply(op, ab);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(rab[i], ra[i] + rb[i], 1e-14 * (1 + std::abs(rab[i])));
}

TEST(Fragmentation, NumberProductionMatchesRateIntegral) {
    const SizeGrid g(8.0, 1024);
    const auto op = assemble(g, constant(0.5));
    std::vector<double> u(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) u[i] = std::exp(-g.center(i));
    const auto r = polykin::apply(op, u);
    const double produced = number_moment(g, r);
    const double expected = 0.5 * number_moment(g, u);
    EXPECT_GE(produced, 0.0);
    EXPECT_NEAR(produced, expected, 2.0 * g.dx() * expected);
}

TEST(Fragmentation, NumberMatchingColumns) {
    // columns j >= 1 reproduce the continuum count exactly; column 0 only mass
    const double h = 0.01;
    const auto cols = gain_columns(0.0, h, 200, constant(1.0), true);
    for (std::size_t j = 1; j < 200; ++j) {
        const double gain_number = cols.coeff[j] * static_cast<double>(j) + cols.coeff[j] + cols.diag[j];
        EXPECT_NEAR(gain_number, 2.0 * cols.loss[j], 1e-12) << "column " << j;
    }
}

TEST(Fragmentation, DimensionMismatchThrows) {
    const SizeGrid g(1.0, 16);
    const auto op = assemble(g, constant(1.0));
    std::vector<double> u(8, 0.0);
    EXPECT_THROW(polykin::apply(op, u), std::invalid_argument);
}
