#include <cmath>

#include <gtest/gtest.h>

#include "polykin/characteristics.hpp"
#include "polykin/diagnostics.hpp"
#include "polykin/kinetics.hpp"

using namespace polykin;

namespace {

RateModel pure_transport(double d0) { return {{LinearIncreasing{d0, 1.0}}, {ConstantRate{0.0}, UniformKernel{}}, {0, 1}}; }

SystemState gaussian(const SizeGrid& g, double center, double width, double number_target, double V) {
    SystemState s(g, V);
    double acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double z = (g.center(i) - center) / width;
        s.u[i] = std::exp(-0.5 * z * z);
        acc += s.u[i] * g.dx();
    }
    for (auto& v : s.u) v *= number_target / acc;
    return s;
}

} // namespace

TEST(Kinetics, VacuumIsStationary) {
    const auto model = pure_transport(0.5);
    const SystemState s(SizeGrid(2.0, 64), 1.3);
    const auto op = assemble(s.grid, model.frag);
    MassLedger L;
    L.M = 1.3;
    const auto next = step(s, model, op, 0.01, L);
    EXPECT_DOUBLE_EQ(next.V, 1.3);
    for (double v : next.u) EXPECT_EQ(v, 0.0);
}

TEST(Kinetics, NoInflowAtThreshold) {
    RateModel model = pure_transport(1.0);
    model.nucleation = {1, 1};
    const SystemState s(SizeGrid(2.0, 64), 1.0);
    const auto op = assemble(s.grid, model.frag);
    MassLedger L;
    L.M = 1.0;
    const auto next = step(s, model, op, 0.01, L);
    EXPECT_EQ(next.u[0], 0.0);
    EXPECT_EQ(L.nucleated, 0.0);
}

TEST(Kinetics, InflowAboveThreshold) {
    RateModel model = pure_transport(1.0);
    model.nucleation = {1, 2};
    const SystemState s(SizeGrid(2.0, 64), 1.5);
    const auto op = assemble(s.grid, model.frag);
    MassLedger L;
    L.M = 1.5;
    const auto next = step(s, model, op, 0.01, L);
    EXPECT_NEAR(next.u[0] * s.grid.dx(), 0.01 * 1.5 * 1.5, 1e-15);
    EXPECT_NEAR(total_mass(next), 1.5, 1e-15);
}

TEST(Kinetics, StepSizeViolationThrows) {
    const auto model = pure_transport(0.5);
    const auto s = gaussian(SizeGrid(3.0, 300), 1.0, 0.2, 1.0, 1.0);
    const auto op = assemble(s.grid, model.frag);
    MassLedger L;
    L.M = total_mass(s);
    EXPECT_THROW(step(s, model, op, 1.0, L), StepSizeError);
}

TEST(Kinetics, RunConservesMass) {
    RateModel model = pure_transport(0.2);
    model.frag = {ConstantRate{0.5}, UniformKernel{}};
    auto s = gaussian(SizeGrid(2.0, 512), 0.6, 0.1, 0.2, 0.5);
    SolverOptions opt;
    opt.t_end = 3.0;
    opt.output_stride = 0.5;
    const auto r = run(s, model, opt);
    const double M = total_mass(s);
    for (const auto& smp : r.series.samples) EXPECT_NEAR(smp.V + smp.M1 + smp.leak, M, 1e-10 * M);
    EXPECT_LE(r.ledger.max_conservation_error, 1e-10);
    EXPECT_NEAR(total_mass(r.final_state) + r.ledger.leaked, M, 1e-10 * M);
}

TEST(Kinetics, SamplesStrictlyIncreasing) {
    const auto model = pure_transport(0.5);
    const auto s = gaussian(SizeGrid(3.0, 256), 1.0, 0.2, 1.0, 1.0);
    SolverOptions opt;
    opt.t_end = 1.0;
    opt.output_stride = 0.3;
    const auto r = run(s, model, opt);
    ASSERT_EQ(r.series.samples.size(), 5u);
    for (std::size_t k = 1; k < r.series.samples.size(); ++k)
        EXPECT_GT(r.series.samples[k].t, r.series.samples[k - 1].t);
    EXPECT_DOUBLE_EQ(r.series.back().t, 1.0);
}

TEST(Kinetics, LeakOverflowCarriesHint) {
    const auto model = pure_transport(0.0);
    const auto s = gaussian(SizeGrid(0.5, 100), 0.3, 0.05, 1.0, 5.0);
    SolverOptions opt;
    opt.t_end = 2.0;
    try {
        run(s, model, opt);
        FAIL() << "expected LeakOverflowError";
    } catch (const LeakOverflowError& e) {
        EXPECT_DOUBLE_EQ(e.x_max_suggested(), 1.0);
    }
}

TEST(Kinetics, RejectsNegativeInitialDensity) {
    const auto model = pure_transport(0.5);
    auto s = gaussian(SizeGrid(3.0, 64), 1.0, 0.2, 1.0, 1.0);
    s.u[3] = -1.0;
    EXPECT_THROW(run(s, model, {}), ValidationError);
}

namespace {

// W2 gap between the Eulerian run and the Lagrangian push-forward of a single
// occupied cell, at each integer time up to t_end, in units of dx.
std::vector<double> single_cell_gaps(std::size_t n, double t_end) {
    const auto model = pure_transport(0.5);
    const SizeGrid g(3.0, n);
    SystemState s(g, 0.0);
    const std::size_t j = n / 3;
    s.u[j] = 1.0 / g.dx();
    s.V = 2.0 - g.center(j);
    SolverOptions opt;
    opt.t_end = t_end;
    opt.output_stride = 1.0;
    opt.snapshot_every = 1;
    const auto r = run(s, model, opt);
    auto e = ensemble_from_state(s);
    std::vector<double> gaps;
    for (std::size_t k = 1; k < r.series.snapshots.size(); ++k) {
        const auto& snap = r.series.snapshots[k];
        e = evolve_to(std::move(e), model.d, snap.t, 1e-3);
        const PointMeasure p{e.X, e.w};
        gaps.push_back(wasserstein_1d(to_point_measure(snap), p, 2) / std::sqrt(number(snap)) / g.dx());
    }
    return gaps;
}

} // namespace

TEST(Kinetics, SingleCellMatchesCharacteristics) {
    // Upwind smearing of a point mass is O(sqrt(dx)); it fades as the flow
    // contracts towards the critical size.
    const auto coarse = single_cell_gaps(1200, 4.0);
    const auto fine = single_cell_gaps(2400, 4.0);
    ASSERT_EQ(coarse.size(), 4u);
    const double order = fine[0] / coarse[0];  // gap / dx grows like sqrt(2) per halving
    EXPECT_GT(order, std::sqrt(2.0) - 0.1);
    EXPECT_LT(order, std::sqrt(2.0) + 0.1);
    EXPECT_LE(coarse[3], 2.0);
    for (std::size_t k = 1; k < coarse.size(); ++k) EXPECT_LT(coarse[k], coarse[k - 1]);
}

TEST(Kinetics, MonomerEquationConsistency) {
    const auto model = pure_transport(0.5);
    const auto s = gaussian(SizeGrid(3.0, 1024), 1.25, 0.3, 1.0, 0.0);
    auto s0 = s;
    s0.V = 2.0 - polymer_mass(s);
    SolverOptions opt;
    opt.t_end = 2.0;
    opt.output_stride = 0.05;
    opt.snapshot_every = 1;
    const auto r = run(s0, model, opt);
    EXPECT_LE(consistency_check_dVdt(r.series, model), 1e-2);
}
