#include <cmath>

#include <gtest/gtest.h>

#include "polykin/characteristics.hpp"
#include "polykin/kinetics.hpp"

using namespace polykin;

namespace {

const DepolyProfile d_lin{LinearIncreasing{0.5, 1.0}};

} // namespace

TEST(Characteristics, SingleParticleReachesCriticalSize) {
    auto e = make_ensemble({0.0}, {1.0}, 2.0);
    e = evolve_to(std::move(e), d_lin, 40.0, 1e-2);
    EXPECT_NEAR(e.X[0], 0.75, 1e-10);
    EXPECT_NEAR(e.V, 1.25, 1e-10);
}

TEST(Characteristics, TwoParticleContraction) {
    // V is shared, so the gap obeys d/dt (X1 - X2) = -alpha (X1 - X2)
    auto e = make_ensemble({0.1, 2.0}, {0.5, 0.5}, 3.0);
    for (double t : {0.5, 1.0, 2.0, 4.0}) {
        e = evolve_to(std::move(e), d_lin, t, 1e-3);
        const double gap = std::abs(e.X[1] - e.X[0]);
        EXPECT_NEAR(gap, 1.9 * std::exp(-t), 1e-9) << "t = " << t;
    }
}

TEST(Characteristics, WeightlessParticlesFollowScalarOde) {
    auto e = make_ensemble({0.1, 3.0}, {0.0, 0.0}, 2.0);
    e = evolve_to(std::move(e), d_lin, 40.0, 1e-2);
    EXPECT_DOUBLE_EQ(e.V, 2.0);
    EXPECT_NEAR(e.X[0], 1.5, 1e-10);
    EXPECT_NEAR(e.X[1], 1.5, 1e-10);
}

TEST(Characteristics, EntropyG) {
    auto single = make_ensemble({1.0}, {2.0}, 4.0);
    EXPECT_EQ(entropy_g(single, 1.0), 0.0);
    single = evolve_to(std::move(single), d_lin, 1.0, 1e-2);
    EXPECT_EQ(entropy_g(single, 1.0), 0.0);

    auto e = make_ensemble({0.2, 0.6, 1.4}, {0.3, 0.5, 0.2}, 3.0);
    EXPECT_DOUBLE_EQ(entropy_g(e, 0.6), 0.3 * 0.16 + 0.2 * 0.64);
    EXPECT_THROW(entropy_g(e, 0.61), std::invalid_argument);

    const double g0 = entropy_g(e, 0.6);
    for (double t = 0.5; t <= 10.0; t += 0.5) {
        e = evolve_to(std::move(e), d_lin, t, 1e-3);
        EXPECT_LE(entropy_g(e, 0.6) / g0, std::exp(-2.0 * t) * 1.01) << "t = " << t;
    }
}

TEST(Characteristics, InvariantsAlongFlow) {
    std::vector<double> z, w;
    for (int j = 0; j < 40; ++j) {
        z.push_back(0.05 + 0.07 * j);
        w.push_back(0.01 + 0.002 * (j % 7));
    }
    auto e = make_ensemble(z, w, 2.5);
    const double n0 = e.number();
    for (double t = 0.25; t <= 5.0; t += 0.25) {
        e = evolve_to(std::move(e), d_lin, t, 1e-3);
        EXPECT_EQ(e.number(), n0);
        EXPECT_NEAR(e.V + e.polymer_mass(), 2.5, 1e-12);
        EXPECT_TRUE(characteristic_bound_holds(e, d_lin));
        for (std::size_t j = 1; j < e.size(); ++j) EXPECT_LE(e.X[j - 1], e.X[j]);
    }
}

namespace {

double representation_deviation(std::size_t n, double center, double width, double t) {
    const SizeGrid g(3.0, n);
    SystemState s(g, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double z = (g.center(i) - center) / width;
        s.u[i] = 0.5 * std::exp(-0.5 * z * z);
        if (s.u[i] < 1e-200) s.u[i] = 0.0;
    }
    s.V = 2.0 - polymer_mass(s);
    auto e = ensemble_from_state(s);
    if (t == 0.0) return representation_check(e, s, d_lin);
    const RateModel model{d_lin, {ConstantRate{0.0}, UniformKernel{}}, {0, 1}};
    SolverOptions opt;
    opt.t_end = t;
    opt.output_stride = t;
    const auto r = run(s, model, opt);
    e = evolve_to(std::move(e), d_lin, t, 1e-3);
    return representation_check(e, r.final_state, d_lin);
}

} // namespace

TEST(Characteristics, RepresentationFormula) {
    EXPECT_EQ(representation_deviation(256, 1.0, 0.2, 0.0), 0.0);
    // First-order smearing in the 1%-weight tails: 8% at 2048 cells, 4.3% at 4096.
    EXPECT_LE(representation_deviation(4096, 1.0, 0.3, 1.0), 0.05);
}

TEST(Characteristics, RepresentationDeviationIsFirstOrder) {
    const double coarse = representation_deviation(1024, 1.0, 0.2, 1.0);
    const double fine = representation_deviation(2048, 1.0, 0.2, 1.0);
    EXPECT_GT(coarse / fine, 2.0 * 0.7);
    EXPECT_LT(coarse / fine, 2.0 * 1.3);
}

TEST(Characteristics, LagrangianSeriesConservesMass) {
    auto e = make_ensemble({0.5, 1.0, 1.5}, {0.2, 0.3, 0.1}, 2.0);
    const auto ts = run_lagrangian(e, d_lin, 2.0, 0.5, 1e-3, 0.75);
    ASSERT_EQ(ts.samples.size(), 5u);
    for (const auto& s : ts.samples) {
        EXPECT_NEAR(s.V + s.M1, 2.0, 1e-12);
        EXPECT_TRUE(std::isfinite(s.W2));
    }
}
