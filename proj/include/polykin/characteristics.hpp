#pragma once

// Lagrangian solver for pure growth/depolymerization: particles follow
// dX/dt = V - d(X) with V = M - sum X_j w_j and constant weights.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "polykin/diagnostics.hpp"
#include "polykin/error.hpp"
#include "polykin/rates.hpp"
#include "polykin/series.hpp"
#include "polykin/state.hpp"

namespace polykin {

struct ParticleEnsemble {
    std::vector<double> z;   // initial positions (labels)
    std::vector<double> X;   // current positions
    std::vector<double> w;   // weights, constant in time
    std::vector<double> u0;  // initial density at z, if built from a density
    double V = 0.0;
    double t = 0.0;
    double M = 0.0;

    std::size_t size() const { return X.size(); }
    double number() const {
        double acc = 0.0;
        for (double v : w) acc += v;
        return acc;
    }
    double polymer_mass() const {
        double acc = 0.0;
        for (std::size_t j = 0; j < X.size(); ++j) acc += X[j] * w[j];
        return acc;
    }
};

/// Ensemble with positions z and weights w; V follows from M.
inline ParticleEnsemble make_ensemble(std::vector<double> z, std::vector<double> w, double M) {
    if (z.size() != w.size()) throw std::invalid_argument("make_ensemble: size mismatch");
    ParticleEnsemble e;
    for (std::size_t j = 0; j < z.size(); ++j) {
        if (!(z[j] >= 0.0) || !(w[j] >= 0.0)) throw std::invalid_argument("make_ensemble: need z >= 0, w >= 0");
    }
    e.z = std::move(z);
    e.X = e.z;
    e.w = std::move(w);
    e.u0.assign(e.X.size(), 0.0);
    e.M = M;
    e.V = M - e.polymer_mass();
    if (e.V < 0.0) throw std::invalid_argument("make_ensemble: M smaller than polymer mass");
    return e;
}

/// One particle per occupied cell, z = centre, w = u dx.
inline ParticleEnsemble ensemble_from_state(const SystemState& s) {
    std::vector<double> z, w, u0;
    for (std::size_t i = 0; i < s.u.size(); ++i) {
        if (s.u[i] <= 0.0) continue;
        z.push_back(s.grid.center(i));
        w.push_back(s.u[i] * s.grid.dx());
        u0.push_back(s.u[i]);
    }
    auto e = make_ensemble(std::move(z), std::move(w), total_mass(s));
    e.u0 = std::move(u0);
    e.V = s.V;
    e.t = s.t;
    return e;
}

namespace detail {

inline void lagrangian_rhs(const ParticleEnsemble& e, const std::vector<double>& Y, const DepolyProfile& d,
                           std::vector<double>& k) {
    double mass = 0.0;
    for (std::size_t j = 0; j < Y.size(); ++j) mass += std::max(Y[j], 0.0) * e.w[j];
    const double V = e.M - mass;
    for (std::size_t j = 0; j < Y.size(); ++j) k[j] = V - eval_d(d, std::max(Y[j], 0.0));
}

} // namespace detail

/// Classical RK4 step of the coupled particle system.
inline ParticleEnsemble evolve(ParticleEnsemble e, const DepolyProfile& d, double dt) {
    const std::size_t n = e.size();
    if (n == 0) {
        e.t += dt;
        return e;
    }
    std::vector<double> k1(n), k2(n), k3(n), k4(n), Y(n);
    detail::lagrangian_rhs(e, e.X, d, k1);
    for (std::size_t j = 0; j < n; ++j) Y[j] = e.X[j] + 0.5 * dt * k1[j];
    detail::lagrangian_rhs(e, Y, d, k2);
    for (std::size_t j = 0; j < n; ++j) Y[j] = e.X[j] + 0.5 * dt * k2[j];
    detail::lagrangian_rhs(e, Y, d, k3);
    for (std::size_t j = 0; j < n; ++j) Y[j] = e.X[j] + dt * k3[j];
    detail::lagrangian_rhs(e, Y, d, k4);
    for (std::size_t j = 0; j < n; ++j) {
        const double x = e.X[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        if (!std::isfinite(x)) throw BlowUpError("evolve: non-finite particle position");
        e.X[j] = std::max(x, 0.0);
    }
    e.t += dt;
    e.V = e.M - e.polymer_mass();
    return e;
}

/// Advances to time t_end in steps no larger than dt.
inline ParticleEnsemble evolve_to(ParticleEnsemble e, const DepolyProfile& d, double t_end, double dt) {
    while (e.t < t_end - 1e-14) {
        const double h = std::min(dt, t_end - e.t);
        e = evolve(std::move(e), d, h);
    }
    e.t = t_end;
    return e;
}

inline std::size_t find_particle(const ParticleEnsemble& e, double z_ref) {
    for (std::size_t j = 0; j < e.z.size(); ++j)
        if (std::abs(e.z[j] - z_ref) <= 1e-12 * std::max(1.0, std::abs(z_ref))) return j;
    throw std::invalid_argument("entropy_g: z_ref is not a tracked particle");
}

/// g = sum_j w_j |X_ref - X_j|^2 for the particle started at z_ref.
inline double entropy_g(const ParticleEnsemble& e, double z_ref) {
    const double xr = e.X[find_particle(e, z_ref)];
    double acc = 0.0;
    for (std::size_t j = 0; j < e.size(); ++j) acc += e.w[j] * (xr - e.X[j]) * (xr - e.X[j]);
    return acc;
}

/// X_j <= z_j + M / alpha for increasing linear d.
inline bool characteristic_bound_holds(const ParticleEnsemble& e, const DepolyProfile& d) {
    const auto* lin = std::get_if<LinearIncreasing>(&d.form);
    if (!lin) throw std::invalid_argument("characteristic_bound_holds: requires linear increasing d");
    for (std::size_t j = 0; j < e.size(); ++j)
        if (e.X[j] > e.z[j] + e.M / lin->alpha) return false;
    return true;
}

/// Compares the Eulerian density at X_j (linear interpolation between cell
/// centres) with u0(z_j) e^{alpha t}. Only particles carrying at least 1% of
/// the largest weight enter the maximum.
inline double representation_check(const ParticleEnsemble& e, const SystemState& eulerian, const DepolyProfile& d) {
    const auto* lin = std::get_if<LinearIncreasing>(&d.form);
    if (!lin) throw std::invalid_argument("representation_check: requires linear increasing d");
    if (std::abs(e.t - eulerian.t) > 1e-9 * std::max(1.0, e.t))
        throw std::invalid_argument("representation_check: ensemble and state at different times");
    const double wmax = e.w.empty() ? 0.0 : *std::max_element(e.w.begin(), e.w.end());
    const double h = eulerian.grid.dx();
    const std::size_t n = eulerian.u.size();
    const double growth = std::exp(lin->alpha * e.t);
    double worst = 0.0;
    for (std::size_t j = 0; j < e.size(); ++j) {
        if (e.w[j] < 0.01 * wmax || e.u0[j] <= 0.0) continue;
        const double s = e.X[j] / h - 0.5;
        double ue;
        if (s <= 0.0) {
            ue = eulerian.u[0];
        } else if (s >= static_cast<double>(n - 1)) {
            ue = eulerian.u[n - 1];
        } else {
            const auto i = static_cast<std::size_t>(s);
            const double th = s - static_cast<double>(i);
            ue = (1.0 - th) * eulerian.u[i] + th * eulerian.u[i + 1];
        }
        const double pred = e.u0[j] * growth;
        worst = std::max(worst, std::abs(ue - pred) / pred);
    }
    return worst;
}

/// Series row of an ensemble; W2 is filled when xbar is given.
inline Sample ensemble_sample(const ParticleEnsemble& e, const DepolyProfile& d, std::optional<double> xbar = {}) {
    Sample out;
    out.t = e.t;
    out.V = e.V;
    out.rho = e.number();
    double k_sum = 0.0, m2 = 0.0;
    for (std::size_t j = 0; j < e.size(); ++j) {
        k_sum += entropy_weight(d, e.X[j]) * e.w[j];
        m2 += e.X[j] * e.X[j] * e.w[j];
    }
    out.M1 = e.polymer_mass();
    out.M2 = 0.5 * m2;
    const double d0 = d_at_zero(d);
    const double v = std::max(e.V, d0);
    out.H = k_sum + 0.5 * (v * v - d0 * d0);
    if (xbar) {
        double acc = 0.0;
        for (std::size_t j = 0; j < e.size(); ++j) acc += (e.X[j] - *xbar) * (e.X[j] - *xbar) * e.w[j];
        out.W2 = std::sqrt(acc);
    }
    return out;
}

/// Samples the ensemble every `stride` up to t_end, integrating with step dt.
inline TimeSeries run_lagrangian(ParticleEnsemble e, const DepolyProfile& d, double t_end, double stride, double dt,
                                 std::optional<double> xbar = {}) {
    if (!(t_end > 0.0) || !(stride > 0.0) || !(dt > 0.0))
        throw ValidationError("run_lagrangian: t_end, stride and dt must be > 0");
    TimeSeries ts;
    ts.M = e.M;
    const double t0 = e.t;
    ts.samples.push_back(ensemble_sample(e, d, xbar));
    const auto n_out = static_cast<std::size_t>(std::ceil(t_end / stride - 1e-9));
    for (std::size_t k = 1; k <= n_out; ++k) {
        e = evolve_to(std::move(e), d, t0 + std::min(t_end, static_cast<double>(k) * stride), dt);
        ts.samples.push_back(ensemble_sample(e, d, xbar));
    }
    return ts;
}

} // namespace polykin
