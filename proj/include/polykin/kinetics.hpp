#pragma once

// Explicit conservative upwind integrator for the coupled monomer/polymer
// system. V is closed algebraically from total mass each step.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "polykin/diagnostics.hpp"
#include "polykin/error.hpp"
#include "polykin/fragmentation.hpp"
#include "polykin/rates.hpp"
#include "polykin/series.hpp"
#include "polykin/state.hpp"

namespace polykin {

struct SolverOptions {
    double cfl = 0.5;
    double frag_stability = 0.5;
    double t_end = 1.0;
    double output_stride = 0.1;
    double leak_tolerance = 1e-6;
    double conservation_tolerance = 1e-10;
    int snapshot_every = 0;  // keep a state snapshot every k-th sample; 0 keeps none

    void check() const {
        if (!(cfl > 0.0 && cfl <= 1.0)) throw ValidationError("solver: cfl must lie in (0, 1]");
        if (!(frag_stability > 0.0 && frag_stability <= 1.0))
            throw ValidationError("solver: frag_stability must lie in (0, 1]");
        if (!(t_end > 0.0)) throw ValidationError("solver: t_end must be > 0");
        if (!(output_stride > 0.0)) throw ValidationError("solver: output_stride must be > 0");
        if (!(leak_tolerance > 0.0)) throw ValidationError("solver: leak_tolerance must be > 0");
        if (!(conservation_tolerance > 0.0)) throw ValidationError("solver: conservation_tolerance must be > 0");
        if (snapshot_every < 0) throw ValidationError("solver: snapshot_every must be >= 0");
    }
};

/// Running audit of where mass and number went.
struct MassLedger {
    double M = 0.0;
    double leaked = 0.0;          // mass through x_max
    double clipped = 0.0;         // mass removed by clipping negative densities
    double absorbed_number = 0.0; // number lost through x = 0
    double nucleated = 0.0;       // number injected at x = 0
    double max_conservation_error = 0.0;  // max |V + sum x u dx + leaked - M| / M
    long steps = 0;
    long entropy_clamps = 0;
};

/// Per-run precomputation shared by all steps on one grid. Cells at and
/// above `top` hold exactly zero density; faces beyond top + 1 then carry no
/// flux and are skipped, including in the CFL bound.
class KineticsWorkspace {
public:
    KineticsWorkspace(const SizeGrid& grid, const RateModel& model)
        : d0_(d_at_zero(model.d)), d_face_(grid.size() + 1), x_(grid.centers()), flux_(grid.size() + 1),
          frag_(grid.size()), top_(grid.size()) {
        for (std::size_t f = 0; f <= grid.size(); ++f) d_face_[f] = eval_d(model.d, grid.face(f));
    }

    /// Number of cells updated by the next step.
    std::size_t active() const { return std::min(top_ + 1, x_.size()); }

    /// max over active faces of |V - d|; d is monotone so the extremes sit at the ends.
    double max_speed(double V) const {
        return std::max(std::abs(V - d_face_.front()), std::abs(V - d_face_[active()]));
    }

    void reset(const std::vector<double>& u, double h) {
        top_ = u.size();
        while (top_ > 0 && u[top_ - 1] == 0.0) --top_;
        number_ = 0.0;
        for (double v : u) number_ += v;
        number_ *= h;
    }

    double d0_;
    std::vector<double> d_face_;
    std::vector<double> x_;
    std::vector<double> flux_;
    std::vector<double> frag_;
    std::size_t top_;
    double number_ = 0.0;  // rho after the last step; sets the closure stiffness
};

// Densities below this are flushed to zero to keep arithmetic out of the
// subnormal range; the removed mass is logged with the clipped mass.
inline constexpr double density_floor = 1e-250;

namespace detail {

inline void step_inplace(SystemState& s, const RateModel& model, const FragOperator& op, double dt, double B_M,
                         const SolverOptions& opt, MassLedger& ledger, KineticsWorkspace& ws) {
    const std::size_t n = s.u.size();
    const double h = s.grid.dx();
    if (!(dt > 0.0)) throw StepSizeError("step: dt must be > 0");
    const double vmax = ws.max_speed(s.V);
    if (dt * vmax > opt.cfl * h * (1.0 + 1e-12))
        throw StepSizeError("step: dt = " + std::to_string(dt) + " violates the CFL bound " +
                            std::to_string(opt.cfl * h / vmax));
    if (dt * B_M > opt.frag_stability * (1.0 + 1e-12))
        throw StepSizeError("step: dt * B_M exceeds frag_stability");

    auto& F = ws.flux_;
    const std::size_t m = ws.active();
    const double v0 = s.V - ws.d_face_[0];
    if (v0 > 0.0) {
        F[0] = nucleation_flux(model.nucleation, s.V, ws.d0_);
    } else {
        F[0] = v0 * s.u[0];
    }
    for (std::size_t f = 1; f < m; ++f) {
        const double v = s.V - ws.d_face_[f];
        F[f] = v > 0.0 ? v * s.u[f - 1] : v * s.u[f];
    }
    const double vm = s.V - ws.d_face_[m];
    F[m] = vm > 0.0 ? vm * s.u[m - 1] : 0.0;

    const bool fragmenting = B_M > 0.0;
    if (fragmenting) {
        double suffix = 0.0;
        for (std::size_t k = m; k-- > 0;) {
            suffix += op.coeff[k] * s.u[k];
            ws.frag_[k] = suffix + (op.diag[k] - op.loss[k]) * s.u[k];
        }
    }

    const double r = dt / h;
    double clipped = 0.0;
    double poly_mass = 0.0;
    double num = 0.0;
    std::size_t top = 0;
    for (std::size_t i = 0; i < m; ++i) {
        double ui = s.u[i] - r * (F[i + 1] - F[i]);
        if (fragmenting) ui += dt * ws.frag_[i];
        if (ui < density_floor) {
            clipped += ws.x_[i] * std::abs(ui);
            ui = 0.0;
        } else {
            top = i + 1;
        }
        s.u[i] = ui;
        poly_mass += ws.x_[i] * ui;
        num += ui;
    }
    ws.top_ = top;
    ws.number_ = num * h;
    poly_mass *= h;
    clipped *= h;

    if (F[0] > 0.0)
        ledger.nucleated += dt * F[0];
    else
        ledger.absorbed_number -= dt * F[0];
    if (m == n) ledger.leaked += dt * F[n] * ws.x_[n - 1];
    ledger.clipped += clipped;

    const double V = ledger.M - ledger.leaked - poly_mass;
    if (!std::isfinite(V) || !std::isfinite(poly_mass)) throw BlowUpError("step: non-finite state");
    if (V < 0.0) throw BlowUpError("step: monomer level became negative (V = " + std::to_string(V) + ")");
    s.V = V;
    s.t += dt;
    ++ledger.steps;

    const double err = std::abs(s.V + poly_mass + ledger.leaked - ledger.M) / ledger.M;
    ledger.max_conservation_error = std::max(ledger.max_conservation_error, err);
    if (err > opt.conservation_tolerance)
        throw ConservationError("step: relative mass defect " + std::to_string(err) + " at t = " + std::to_string(s.t));
}

} // namespace detail

/// One explicit step. The returned state has V closed from the ledger's mass.
inline SystemState step(const SystemState& state, const RateModel& model, const FragOperator& op, double dt,
                        MassLedger& ledger, const SolverOptions& opt = {}) {
    if (!(op.grid == state.grid)) throw std::invalid_argument("step: operator grid differs from state grid");
    KineticsWorkspace ws(state.grid, model);
    ws.reset(state.u, state.grid.dx());
    SystemState next = state;
    const double B_M = op.loss.empty() ? 0.0 : *std::max_element(op.loss.begin(), op.loss.end());
    detail::step_inplace(next, model, op, dt, B_M, opt, ledger, ws);
    return next;
}

/// Optional extras recorded along a run.
struct RunProbes {
    std::optional<double> xbar;  // record W2 to rho0 * delta_xbar
};

struct RunResult {
    TimeSeries series;
    SystemState final_state;
    MassLedger ledger;
};

inline Sample make_sample(const SystemState& s, const RateModel& model, const MassLedger& ledger,
                          const RunProbes& probes, long* clamps = nullptr) {
    Sample out;
    out.t = s.t;
    out.V = s.V;
    out.rho = number(s);
    out.M1 = moment(s, 1.0);
    out.M2 = moment(s, 2.0);
    const auto H = entropy_H(s, model.d);
    out.H = H.H;
    if (H.clamped && clamps) ++*clamps;
    out.leak = ledger.leaked;
    out.clipped = ledger.clipped;
    if (probes.xbar) out.W2 = wasserstein_to_dirac(s, *probes.xbar, 2);
    return out;
}

/// Integrates to opt.t_end with the largest stable dt, sampling every output_stride.
inline RunResult run(const SystemState& initial, const RateModel& model, const SolverOptions& opt,
                     const RunProbes& probes = {}) {
    opt.check();
    for (double v : initial.u)
        if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("run: initial density must be finite and >= 0");
    if (!(initial.V >= 0.0)) throw ValidationError("run: initial monomer level must be >= 0");

    RunResult res;
    res.final_state = initial;
    SystemState& s = res.final_state;
    MassLedger& L = res.ledger;
    L.M = total_mass(initial);
    if (!(L.M > 0.0)) throw ValidationError("run: total mass must be > 0");
    res.series.M = L.M;

    const FragOperator op = assemble(s.grid, model.frag);
    const double B_M = op.loss.empty() ? 0.0 : *std::max_element(op.loss.begin(), op.loss.end());
    KineticsWorkspace ws(s.grid, model);
    ws.reset(s.u, s.grid.dx());
    const double h = s.grid.dx();
    const double t0 = s.t;

    auto record = [&](std::size_t k) {
        res.series.samples.push_back(make_sample(s, model, L, probes, &L.entropy_clamps));
        if (opt.snapshot_every > 0 && k % static_cast<std::size_t>(opt.snapshot_every) == 0)
            res.series.snapshots.push_back(s);
    };

    record(0);
    const auto n_out = static_cast<std::size_t>(std::ceil(opt.t_end / opt.output_stride - 1e-9));
    for (std::size_t k = 1; k <= n_out; ++k) {
        const double t_target = t0 + std::min(opt.t_end, static_cast<double>(k) * opt.output_stride);
        while (s.t < t_target) {
            const double vmax = ws.max_speed(s.V);
            double dt = vmax > 0.0 ? opt.cfl * h / vmax : std::numeric_limits<double>::infinity();
            if (B_M > 0.0) dt = std::min(dt, opt.frag_stability / B_M);
            // The closure feeds V back with rate rho; keep dt * rho below the CFL number.
            if (ws.number_ > 0.0) dt = std::min(dt, opt.cfl / ws.number_);
            const double remaining = t_target - s.t;
            bool last = false;
            if (dt >= remaining) {
                dt = remaining;
                last = true;
            } else if (dt > 0.5 * remaining) {
                dt = 0.5 * remaining;  // avoid a sliver step before the sample time
            }
            if (!std::isfinite(dt)) dt = remaining, last = true;
            detail::step_inplace(s, model, op, dt, B_M, opt, L, ws);
            if (last) s.t = t_target;
            if (L.leaked > opt.leak_tolerance * L.M)
                throw LeakOverflowError("run: mass leaked through x_max exceeds tolerance at t = " +
                                            std::to_string(s.t),
                                        2.0 * s.grid.x_max());
        }
        record(k);
    }
    return res;
}

/// Max relative mismatch between the centred finite difference of V over
/// snapshots and -V rho + sum d(x_i) u_i dx, normalized by max |rhs|.
inline double consistency_check_dVdt(const TimeSeries& series, const RateModel& model) {
    const auto& snaps = series.snapshots;
    if (snaps.size() < 3) throw Error("consistency_check_dVdt: need at least 3 snapshots");
    auto rhs = [&](const SystemState& s) {
        double acc = 0.0;
        for (std::size_t i = 0; i < s.u.size(); ++i) acc += (eval_d(model.d, s.grid.center(i)) - s.V) * s.u[i];
        return acc * s.grid.dx();
    };
    double max_rhs = 0.0, max_gap = 0.0;
    for (std::size_t k = 1; k + 1 < snaps.size(); ++k) {
        const double fd = (snaps[k + 1].V - snaps[k - 1].V) / (snaps[k + 1].t - snaps[k - 1].t);
        const double r = rhs(snaps[k]);
        max_rhs = std::max(max_rhs, std::abs(r));
        max_gap = std::max(max_gap, std::abs(fd - r));
    }
    if (max_rhs == 0.0) return max_gap;
    return max_gap / max_rhs;
}

} // namespace polykin
