#pragma once

// Acceptance suites. Each suite runs its scenarios and returns one check per
// measured quantity, tagged with the acceptance criterion it feeds.

#include <chrono>
#include <cmath>
#include <future>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "polykin/characteristics.hpp"
#include "polykin/diagnostics.hpp"
#include "polykin/fragmentation.hpp"
#include "polykin/io.hpp"
#include "polykin/kinetics.hpp"
#include "polykin/scenario.hpp"
#include "polykin/steady.hpp"

namespace polykin {

struct CriterionCheck {
    int criterion = 0;
    std::string name;
    double measured = 0.0;
    double limit = 0.0;
    std::string relation;  // how measured is compared with limit: "<=", ">=", "<", "in"
    bool pass = false;
    std::string detail;
};

struct SuiteReport {
    std::string suite;
    std::vector<CriterionCheck> checks;
    double seconds = 0.0;
    std::string error;  // set when the suite aborted

    bool pass() const {
        if (!error.empty()) return false;
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

inline const std::map<int, std::string>& criterion_titles() {
    static const std::map<int, std::string> titles = {
        {1, "mass conservation"},
        {2, "critical-size convergence and W2 rate"},
        {3, "characteristic contraction envelope"},
        {4, "entropy monotonicity and dissipation"},
        {5, "nucleation limits with d(0) > 0"},
        {6, "nucleation limits with d(0) = 0"},
        {7, "shattering rate, envelope and M2 decay"},
        {8, "low-monomer relaxation bound"},
        {9, "steady-state pipeline"},
        {10, "property suite"},
    };
    return titles;
}

// ---------------------------------------------------------------------------
// Built-in scenarios, mirrored by the files in scenarios/
// ---------------------------------------------------------------------------

inline const std::map<std::string, std::string>& builtin_scenario_texts() {
    static const std::map<std::string, std::string> texts = {
        {"low_monomer", R"({
  "name": "low_monomer",
  "regime": "increasing",
  "model": { "d": { "type": "linear", "d0": 2.0, "alpha": 1.0 } },
  "grid": { "x_max": 4.0, "cells": 2048 },
  "initial": { "u0": { "type": "gaussian", "center": 1.0, "width": 0.2, "number": 0.5 }, "M": 1.5 },
  "solver": { "t_end": 10.0, "output_stride": 0.1 }
})"},
        {"critical_size", R"({
  "name": "critical_size",
  "regime": "increasing",
  "model": { "d": { "type": "linear", "d0": 0.5, "alpha": 1.0 } },
  "grid": { "x_max": 3.0, "cells": 2998 },
  "initial": { "u0": { "type": "gaussian", "center": 1.25, "width": 0.3, "number": 1.0 }, "M": 2.0 },
  "solver": { "t_end": 20.0, "output_stride": 0.25, "snapshot_every": 4, "lagrangian_dt": 0.001 },
  "diagnostics": { "track_xbar": true, "fits": ["T23"], "fit_window": [2.0, 10.0] },
  "characteristics": { "particles": 64, "dt": 0.001 }
})"},
        {"nucleation_entropy", R"({
  "name": "nucleation_entropy",
  "regime": "increasing",
  "model": { "d": { "type": "linear", "d0": 1.0, "alpha": 1.0 }, "nucleation": { "epsilon": 1, "i0": 1 } },
  "grid": { "x_max": 6.0, "cells": 2048 },
  "initial": { "u0": { "type": "gaussian", "center": 1.0, "width": 0.3, "number": 0.5 }, "M": 3.0 },
  "solver": { "t_end": 5.0, "output_stride": 0.01, "snapshot_every": 1 }
})"},
        {"nucleation_d0pos", R"({
  "name": "nucleation_d0pos",
  "regime": "increasing",
  "model": { "d": { "type": "linear", "d0": 1.0, "alpha": 1.0 }, "nucleation": { "epsilon": 1, "i0": 1 } },
  "grid": { "x_max": 3.0, "cells": 4096 },
  "initial": { "u0": { "type": "zero" }, "M": 3.0 },
  "solver": { "t_end": 200.0, "output_stride": 0.5 },
  "diagnostics": { "fits": ["T24_d0pos", "L39"], "fit_window": [100.0, 200.0] }
})"},
        {"nucleation_d0zero", R"({
  "name": "nucleation_d0zero",
  "regime": "increasing",
  "model": { "d": { "type": "linear", "d0": 0.0, "alpha": 1.0 }, "nucleation": { "epsilon": 1, "i0": 1 } },
  "grid": { "x_max": 3.0, "cells": 4096 },
  "initial": { "u0": { "type": "zero" }, "M": 2.0 },
  "solver": { "t_end": 200.0, "output_stride": 0.5 },
  "diagnostics": { "fits": ["T24_d0zero"] }
})"},
        {"shattering", R"({
  "name": "shattering",
  "regime": "increasing",
  "model": { "d": { "type": "linear", "d0": 0.2, "alpha": 1.0 }, "B": { "type": "constant", "B_m": 0.5 } },
  "grid": { "x_max": 0.7, "cells": 8192 },
  "initial": { "u0": { "type": "gaussian", "center": 0.5, "width": 0.04, "number": 0.1 }, "V0": 0.55 },
  "solver": { "t_end": 20.0, "output_stride": 0.05 },
  "diagnostics": { "fits": ["T26"], "fit_window": [5.0, 20.0], "m2_check": true }
})"},
        {"steady", R"({
  "name": "steady",
  "regime": "decreasing_with_fragmentation",
  "model": {
    "d": { "type": "decaying", "d_inf": 0.2, "C_d": 1.0, "n": 2 },
    "B": { "type": "saturated_power", "b": 1.0, "gamma": 1.0, "x_sat": 10.0 }
  },
  "steady": { "M": 2.0, "R": 50.0, "cells": 2000, "path": "direct", "k_max": 3, "gamma": 1.0 }
})"},
    };
    return texts;
}

inline json builtin_scenario_json(const std::string& name) {
    const auto& texts = builtin_scenario_texts();
    auto it = texts.find(name);
    if (it == texts.end()) throw std::invalid_argument("unknown built-in scenario '" + name + "'");
    return parse_json_text(it->second, name);
}

inline Scenario builtin_scenario(const std::string& name) { return parse_scenario(builtin_scenario_json(name)); }

namespace detail {

inline CriterionCheck at_most(int crit, std::string name, double measured, double limit, std::string detail = {}) {
    return {crit, std::move(name), measured, limit, "<=", measured <= limit, std::move(detail)};
}

inline CriterionCheck at_least(int crit, std::string name, double measured, double limit, std::string detail = {}) {
    return {crit, std::move(name), measured, limit, ">=", measured >= limit, std::move(detail)};
}

inline const RateFitReport& find_fit(const std::vector<RateFitReport>& fits, const std::string& estimator) {
    for (const auto& f : fits)
        if (f.estimator == estimator) return f;
    throw Error("missing estimator " + estimator);
}

inline CriterionCheck fit_check(int crit, const std::string& run, const RateFitReport& f, double tol) {
    return at_most(crit, run + ": " + f.estimator + " relative error", f.relative_error, tol,
                   "fitted " + fmt(f.fitted) + " vs theory " + fmt(f.theory) + " on [" + fmt(f.t_lo) + ", " +
                       fmt(f.t_hi) + "]");
}

inline CriterionCheck conservation_check(const std::string& run, const MassLedger& L) {
    return at_most(1, run + ": max per-step relative mass defect", L.max_conservation_error, 1e-10,
                   "leaked " + fmt(L.leaked) + ", clipped " + fmt(L.clipped));
}

inline RunResult run_scenario(const Scenario& sc, const RunProbes& probes = {}) {
    return run(initial_state(sc), sc.model, sc.solver, probes);
}

/// Entropy checks on one run: largest increase rate of H and the relative
/// mismatch between the centred difference of H and minus the dissipation.
struct EntropyAudit {
    double max_increase = 0.0;  // max (H_{k+1} - H_k) / dt, relative to H(0)
    double mismatch = 0.0;
};

inline EntropyAudit entropy_audit(const RunResult& r, const DepolyProfile& d) {
    EntropyAudit a;
    const auto& S = r.series.samples;
    const auto& snaps = r.series.snapshots;
    if (snaps.size() != S.size()) throw Error("entropy_audit: need a snapshot at every sample");
    for (std::size_t k = 1; k < S.size(); ++k)
        a.max_increase = std::max(a.max_increase, (S[k].H - S[k - 1].H) / (S[k].t - S[k - 1].t) / S[0].H);
    double worst = 0.0, scale = 0.0;
    for (std::size_t k = 1; k + 1 < S.size(); ++k) {
        const double fd = (S[k + 1].H - S[k - 1].H) / (S[k + 1].t - S[k - 1].t);
        const double D = entropy_dissipation(snaps[k], d);
        worst = std::max(worst, std::abs(fd + D));
        scale = std::max(scale, D);
    }
    a.mismatch = worst / scale;
    return a;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

/// Low-monomer relaxation: |M - V(t)| <= (M - V0) e^{-alpha t} (1 + 5%).
inline std::vector<CriterionCheck> suite_T21() {
    std::vector<CriterionCheck> out;
    const auto sc = builtin_scenario("low_monomer");
    const auto s0 = initial_state(sc);
    const auto r = run(s0, sc.model, sc.solver);
    const double M = r.series.M;
    const double alpha = eval_d_prime(sc.model.d, 0.0);
    double worst = 0.0;
    for (const auto& s : r.series.samples)
        worst = std::max(worst, std::abs(M - s.V) / ((M - s0.V) * std::exp(-alpha * s.t)));
    out.push_back(detail::at_most(8, "low_monomer: max |M - V| / ((M - V0) e^{-alpha t})", worst, 1.05,
                                  "V0 = " + fmt(s0.V) + ", M = " + fmt(M)));
    out.push_back(detail::conservation_check("low_monomer", r.ledger));
    return out;
}

/// Critical-size convergence, W2 rate, solver agreement, contraction of g,
/// and the entropy identity along LS and LSN runs.
inline std::vector<CriterionCheck> suite_T23() {
    std::vector<CriterionCheck> out;
    const auto sc = builtin_scenario("critical_size");
    const auto s0 = initial_state(sc);
    const double M = total_mass(s0);
    const double rho0 = number(s0);
    const auto crit = predict_xbar(M, rho0, sc.model.d);
    const double alpha = eval_d_prime(sc.model.d, 0.0);
    const double h = s0.grid.dx();

    RunProbes probes;
    probes.xbar = crit.xbar;
    const auto eul = run(s0, sc.model, sc.solver, probes);
    out.push_back(detail::conservation_check("critical_size", eul.ledger));
    out.push_back(detail::at_most(2, "critical_size: |V(20) - Vbar|", std::abs(eul.final_state.V - crit.Vbar), 1e-3,
                                  "Vbar = " + fmt(crit.Vbar) + ", xbar = " + fmt(crit.xbar)));

    // The particle solver carries no numerical diffusion, so it resolves the
    // W2 decay far below the Eulerian O(dx) floor.
    const auto lag = run_lagrangian(ensemble_from_state(s0), sc.model.d, sc.solver.t_end, sc.solver.output_stride,
                                    sc.lagrangian_dt, crit.xbar);
    const auto lag_fit = detail::find_fit(fit_rates(lag, sc.model, Theorem::T23, sc.diagnostics.window), "W2_log_slope");
    const auto eul_fit = detail::find_fit(fit_rates(eul.series, sc.model, Theorem::T23, sc.diagnostics.window),
                                          "W2_log_slope");
    auto w2 = detail::fit_check(2, "critical_size (particle solver)", lag_fit, 0.10);
    w2.detail += "; finite-volume slope " + fmt(eul_fit.fitted) + " saturates at the grid floor";
    out.push_back(w2);

    double gap = 0.0;
    auto e = ensemble_from_state(s0);
    for (const auto& snap : eul.series.snapshots) {
        e = evolve_to(std::move(e), sc.model.d, snap.t, sc.lagrangian_dt);
        if (snap.t < 1.0) continue;
        gap = std::max(gap, wasserstein_1d(to_point_measure(snap), PointMeasure{e.X, e.w}, 2));
    }
    out.push_back(detail::at_most(2, "critical_size: max W2(finite volume, particles) for t >= 1, in units of dx",
                                  gap / h, 2.0));

    // g(t, z) / g(0, z) against e^{-2 alpha t} for particles at weight quantiles.
    {
        auto ens = ensemble_from_state(s0);
        std::vector<double> refs;
        double total = ens.number(), acc = 0.0;
        std::size_t q = 0;
        const double quantiles[] = {0.1, 0.5, 0.9};
        for (std::size_t j = 0; j < ens.size() && q < 3; ++j) {
            acc += ens.w[j];
            if (acc >= quantiles[q] * total) refs.push_back(ens.z[j]), ++q;
        }
        std::vector<double> g0;
        for (double z : refs) g0.push_back(entropy_g(ens, z));
        double worst = 0.0;
        for (const auto& smp : lag.samples) {
            if (smp.t == 0.0) continue;
            ens = evolve_to(std::move(ens), sc.model.d, smp.t, sc.lagrangian_dt);
            for (std::size_t k = 0; k < refs.size(); ++k)
                worst = std::max(worst, entropy_g(ens, refs[k]) / g0[k] / std::exp(-2.0 * alpha * smp.t));
        }
        out.push_back(detail::at_most(3, "critical_size: max g(t,z) / (g(0,z) e^{-2 alpha t}) over 3 particles", worst,
                                      1.01));
    }

    // Entropy along the LS run and along a run with nucleation.
    auto entropy_runs = [&](const std::string& base, const std::string& label) {
        std::vector<detail::EntropyAudit> audits;
        for (long n : {2048L, 4096L}) {
            auto doc = builtin_scenario_json(base);
            doc["grid"]["cells"] = n;
            doc["solver"]["t_end"] = 5.0;
            doc["solver"]["output_stride"] = 0.01;
            doc["solver"]["snapshot_every"] = 1;
            const auto esc = parse_scenario(doc);
            const auto r = detail::run_scenario(esc);
            out.push_back(detail::conservation_check(label + " N=" + std::to_string(n), r.ledger));
            audits.push_back(detail::entropy_audit(r, esc.model.d));
        }
        out.push_back(detail::at_most(4, label + ": max dH/dt / H(0) at N=2048", audits[0].max_increase, 1e-3));
        out.push_back(detail::at_most(4, label + ": relative mismatch of dH/dt and -dissipation at N=2048",
                                      audits[0].mismatch, 0.02));
        out.push_back(detail::at_least(4, label + ": mismatch ratio N=2048 / N=4096", audits[0].mismatch / audits[1].mismatch,
                                       1.8, "first-order error should halve"));
    };
    entropy_runs("critical_size", "LS");
    entropy_runs("nucleation_entropy", "LSN");
    return out;
}

/// Nucleation-driven growth: d(0) > 0 with i0 in {1, 2}, and d(0) = 0.
inline std::vector<CriterionCheck> suite_T24() {
    std::vector<CriterionCheck> out;
    for (long i0 : {1L, 2L}) {
        auto doc = builtin_scenario_json("nucleation_d0pos");
        doc["model"]["nucleation"]["i0"] = i0;
        const auto sc = parse_scenario(doc);
        const auto r = detail::run_scenario(sc);
        const std::string label = "d0pos i0=" + std::to_string(i0);
        out.push_back(detail::conservation_check(label, r.ledger));
        const auto fits = fit_rates(r.series, sc.model, Theorem::T24_d0pos, sc.diagnostics.window);
        out.push_back(detail::fit_check(5, label, detail::find_fit(fits, "rho_over_t"), 0.05));
        out.push_back(detail::fit_check(5, label, detail::find_fit(fits, "t_times_V_minus_d0"), 0.10));
        const auto l39 = fit_rates(r.series, sc.model, Theorem::L39, sc.diagnostics.window);
        out.push_back(detail::fit_check(5, label, detail::find_fit(l39, "rho_times_V_minus_d0"), 0.10));
    }
    {
        const auto sc = builtin_scenario("nucleation_d0zero");
        const auto r = detail::run_scenario(sc);
        out.push_back(detail::conservation_check("d0zero", r.ledger));
        const auto fits = fit_rates(r.series, sc.model, Theorem::T24_d0zero, sc.diagnostics.window);
        out.push_back(detail::fit_check(6, "d0zero", detail::find_fit(fits, "rho_over_t_pow"), 0.10));
        out.push_back(detail::fit_check(6, "d0zero", detail::find_fit(fits, "t_pow_times_V"), 0.10));
    }
    return out;
}

/// Shattering under constant fragmentation.
inline std::vector<CriterionCheck> suite_T26() {
    std::vector<CriterionCheck> out;
    const auto sc = builtin_scenario("shattering");
    const auto r = detail::run_scenario(sc);
    out.push_back(detail::conservation_check("shattering", r.ledger));
    const auto fits = fit_rates(r.series, sc.model, Theorem::T26, sc.diagnostics.window);
    out.push_back(detail::fit_check(7, "shattering", detail::find_fit(fits, "log_rho_rate"), 0.05));
    const auto& env = detail::find_fit(fits, "V_minus_d0_envelope");
    out.push_back(detail::at_most(7, "shattering: (V - d(0)) at t=20 over the C t e^{-B_m t} envelope",
                                  env.fitted / env.theory, 1.0,
                                  "V - d(0) = " + fmt(env.fitted) + ", envelope " + fmt(env.theory)));
    const auto m2 = m2_decay_check(r.series, sc.regime);
    out.push_back(detail::at_most(7, "shattering: M2(20) / M2(0)", m2.ratio, 0.01,
                                  "fitted decay constant " + fmt(m2.decay_constant)));
    return out;
}

/// Steady state for decreasing d with fragmentation.
inline std::vector<CriterionCheck> suite_T28() {
    std::vector<CriterionCheck> out;
    const auto sc = builtin_scenario("steady");
    const auto& model = sc.model;
    const double M = sc.steady.M;
    auto base = sc.steady.opt;

    auto fine = base;
    fine.n = 2 * base.n;
    auto faithful = base;
    faithful.path = SteadyPath::Faithful;
    auto wide = base;
    wide.R = 2.0 * base.R;
    wide.n = 2 * base.n;

    auto solve = [&](SteadyOptions o) { return std::async(std::launch::async, [&model, M, o] {
                                            return solve_steady(model, o, M);
                                        }); };
    auto f_direct = solve(base), f_fine = solve(fine), f_faith = solve(faithful), f_wide = solve(wide);
    const auto direct = f_direct.get();
    const auto refined = f_fine.get();
    const auto faith = f_faith.get();
    const auto widened = f_wide.get();

    const double lo = d_infimum(model.d), hi = d_at_zero(model.d);
    out.push_back(detail::at_most(9, "steady: |lambda(Vbar)|", std::abs(direct.lambda), 1e-10,
                                  "Vbar = " + fmt(direct.Vbar)));
    out.push_back({9, "steady: Vbar strictly inside (d_inf, d(0))", direct.Vbar, 0.0, "in",
                   direct.Vbar > lo && direct.Vbar < hi, "(" + fmt(lo) + ", " + fmt(hi) + ")"});
    out.push_back(detail::at_most(9, "steady: eigen residual", direct.eigen_residual, 1e-8));
    out.push_back(detail::at_most(9, "steady: |Vbar faithful - Vbar direct|", std::abs(faith.Vbar - direct.Vbar), 1e-2,
                                  "faithful Vbar = " + fmt(faith.Vbar) + ", lambda = " + fmt(faith.lambda)));
    for (const auto& c : verify_estimates(direct, refined, model, sc.steady.k_max, sc.steady.gamma)) {
        out.push_back({9, "steady estimate: " + c.name, c.value, c.bound, "check", c.pass, c.detail});
    }
    out.push_back(detail::at_most(9, "steady: |Vbar(2R) - Vbar(R)| at equal dx", std::abs(widened.Vbar - direct.Vbar),
                                  1e-3, "R = " + fmt(base.R) + " -> " + fmt(wide.R)));
    return out;
}

/// Operator, entropy, Wasserstein and determinism properties.
inline std::vector<CriterionCheck> suite_props() {
    std::vector<CriterionCheck> out;
    const double eps = std::numeric_limits<double>::epsilon();

    {
        FragProfile f;
        double worst = 0.0;
        for (double y : {1e-6, 0.3, 1.0, 7.5, 1e4}) {
            worst = std::max(worst, std::abs(kernel_partial_moment(f, y, y, 0) - 1.0));
            worst = std::max(worst, std::abs(kernel_partial_moment(f, y, y, 1) - 0.5));
        }
        out.push_back(detail::at_most(10, "kernel moments: |int kappa - 1|, |int (x/y) kappa - 1/2|", worst, 0.0));
        double a1 = 0.0;
        for (double x : {1e-6, 0.3, 1.0, 7.5, 1e4}) a1 = std::max(a1, std::abs(a_coefficient(f, x, 1)));
        out.push_back(detail::at_most(10, "a_1 = 0", a1, 0.0));
    }

    {
        FragProfile f;
        f.rate = SaturatedPower{1.0, 1.0, 10.0};
        const SizeGrid grid(20.0, 400);
        const auto op = assemble(grid, f, true);
        std::mt19937 gen(12345);
        std::vector<double> u(grid.size());
        for (auto& v : u) v = std::generate_canonical<double, 53>(gen);
        const auto fast = polykin::apply(op, u);
        const auto dense = apply_dense(op, u);
        double diff = 0.0, scale = 0.0, mass = 0.0, loss = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            diff = std::max(diff, std::abs(fast[i] - dense[i]));
            scale = std::max(scale, std::abs(dense[i]));
            mass += grid.center(i) * fast[i];
            loss += grid.center(i) * op.loss[i] * u[i];
        }
        out.push_back(detail::at_most(10, "fragmentation: fast path vs dense, relative", diff / scale, 1e-12));
        out.push_back(detail::at_most(1, "fragmentation: |sum x (G - L) u| / sum x L u", std::abs(mass) / loss,
                                      64.0 * eps, "limit is 64 machine epsilons"));
    }

    {
        SystemState s(SizeGrid(5.0, 500), 0.0);
        for (std::size_t i = 0; i < s.u.size(); ++i) {
            const double x = s.grid.center(i);
            s.u[i] = x * std::exp(-x);
        }
        double worst = 0.0;
        for (double xbar : {0.0, 0.7, 2.5}) {
            const double w = wasserstein_to_dirac(s, xbar, 2);
            // 2 * (second moment about xbar) in the (1/n) moment convention.
            double m2 = 0.0;
            for (std::size_t i = s.u.size(); i-- > 0;) {
                const double y = s.grid.center(i) - xbar;
                m2 += 0.5 * y * y * s.u[i] * s.grid.dx();
            }
            worst = std::max(worst, std::abs(w * w - 2.0 * m2) / (2.0 * m2));
        }
        out.push_back(detail::at_most(10, "W2 to Dirac squared vs 2 x second moment, relative", worst, 1e-12));
    }

    {
        double worst = 0.0;
        for (double M : {1.0, 2.0, 7.5})
            for (double rho0 : {0.1, 1.0, 4.0}) {
                DepolyProfile d;
                d.form = LinearIncreasing{0.5, 1.3};
                const auto c = predict_xbar(M, rho0, d);
                worst = std::max(worst, std::abs(rho0 * c.xbar + eval_d(d, c.xbar) - M) / M);
            }
        out.push_back(detail::at_most(10, "predict_xbar: |rho0 xbar + d(xbar) - M| / M", worst, 1e-12));
    }

    {
        auto doc = builtin_scenario_json("shattering");
        doc["grid"]["cells"] = 1024;
        doc["solver"]["t_end"] = 2.0;
        const auto sc = parse_scenario(doc);
        const ArtifactMeta meta{tool_version, sc.hash};
        auto once = [&] { return series_csv(detail::run_scenario(sc).series, meta); };
        auto a = std::async(std::launch::async, once);
        auto b = std::async(std::launch::async, once);
        const auto c = once();
        const bool same = a.get() == c && b.get() == c;
        out.push_back({10, "determinism: byte-identical series from three runs", same ? 1.0 : 0.0, 1.0, "==", same,
                       "two concurrent and one sequential"});
    }
    return out;
}

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names = {"T21", "T23", "T24", "T26", "T28", "props"};
    return names;
}

inline SuiteReport run_suite(const std::string& name) {
    SuiteReport rep;
    rep.suite = name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (name == "T21") rep.checks = suite_T21();
        else if (name == "T23") rep.checks = suite_T23();
        else if (name == "T24") rep.checks = suite_T24();
        else if (name == "T26") rep.checks = suite_T26();
        else if (name == "T28") rep.checks = suite_T28();
        else if (name == "props") rep.checks = suite_props();
        else throw ValidationError("unknown suite '" + name + "'");
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception& e) {
        rep.error = e.what();
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

inline json to_json(const SuiteReport& r) {
    json checks = json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"criterion", c.criterion},
                          {"name", c.name},
                          {"measured", c.measured},
                          {"limit", c.limit},
                          {"relation", c.relation},
                          {"pass", c.pass},
                          {"detail", c.detail}});
    json j = {{"suite", r.suite}, {"pass", r.pass()}, {"seconds", r.seconds}, {"checks", checks}};
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

} // namespace polykin
