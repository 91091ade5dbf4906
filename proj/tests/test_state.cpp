#include <cmath>

#include <gtest/gtest.h>

#include "polykin/state.hpp"

using namespace polykin;

namespace {

SystemState exponential(std::size_t n) {
    SystemState s(SizeGrid(40.0, n), 0.0);
    for (std::size_t i = 0; i < n; ++i) s.u[i] = std::exp(-s.grid.center(i));
    return s;
}

} // namespace

TEST(State, GridGeometry) {
    const SizeGrid g(2.0, 4);
    EXPECT_DOUBLE_EQ(g.dx(), 0.5);
    EXPECT_DOUBLE_EQ(g.center(0), 0.25);
    EXPECT_DOUBLE_EQ(g.face(4), 2.0);
    EXPECT_THROW(SizeGrid(0.0, 4), std::invalid_argument);
    EXPECT_THROW(SizeGrid(1.0, 1), std::invalid_argument);
}

TEST(State, Moments) {
    const auto s = exponential(4096);
    EXPECT_NEAR(moment(s, 1), 1.0, 1e-3);
    EXPECT_NEAR(moment(s, 2), 1.0, 1e-3);
    EXPECT_NEAR(number(s), 1.0, 1e-3);
    const SystemState zero(SizeGrid(1.0, 8), 0.0);
    EXPECT_EQ(moment(zero, 1), 0.0);
    EXPECT_EQ(number(zero), 0.0);
    EXPECT_THROW(moment(s, 0.0), std::invalid_argument);
}

TEST(State, SingleCellNumber) {
    SystemState s(SizeGrid(4.0, 8), 0.0);
    s.u[3] = 2.0 / s.grid.dx();
    EXPECT_DOUBLE_EQ(number(s), 2.0);
}

TEST(State, TotalMass) {
    const SystemState vacuum(SizeGrid(1.0, 4), 2.0);
    EXPECT_DOUBLE_EQ(total_mass(vacuum), 2.0);
    SystemState s(SizeGrid(4.0, 2), 1.0);
    s.u[1] = 1.0 / s.grid.dx();  // x = 3, u dx = 1
    EXPECT_DOUBLE_EQ(total_mass(s), 4.0);
}
