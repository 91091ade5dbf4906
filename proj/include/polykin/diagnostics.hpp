#pragma once

// Lyapunov functionals, Wasserstein distances, the critical-size prediction,
// and least-squares estimators for the asymptotic rates.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polykin/error.hpp"
#include "polykin/rates.hpp"
#include "polykin/series.hpp"
#include "polykin/state.hpp"

namespace polykin {

// ---------------------------------------------------------------------------
// Critical size
// ---------------------------------------------------------------------------

struct CriticalSize {
    double xbar = 0.0;
    double Vbar = 0.0;
};

/// Unique root of rho0 x + d(x) = M for increasing d, by bisection on
/// [0, (M - d(0)) / rho0]. Bisection runs to machine resolution; `tol` is
/// the largest bracket width accepted.
template <std::invocable<double> D>
CriticalSize predict_xbar(double M, double rho0, D&& d, double tol = 1e-12) {
    const double d0 = d(0.0);
    if (!(M > d0)) throw Error("predict_xbar: M <= d(0), no positive critical size (all mass returns to monomers)");
    if (!(rho0 > 0.0)) throw std::invalid_argument("predict_xbar: rho0 must be > 0");
    auto f = [&](double x) { return rho0 * x + d(x) - M; };
    double lo = 0.0;
    double hi = (M - d0) / rho0;
    if (f(hi) < 0.0) throw Error("predict_xbar: d is not increasing on the bracket");
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (f(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    if (hi - lo > tol) throw ConvergenceError("predict_xbar: bisection stalled");
    const double x = std::abs(f(lo)) <= std::abs(f(hi)) ? lo : hi;
    return {x, d(x)};
}

inline CriticalSize predict_xbar(double M, double rho0, const DepolyProfile& d, double tol = 1e-12) {
    if (!d.increasing()) throw Error("predict_xbar: requires an increasing depolymerization rate");
    return predict_xbar(M, rho0, [&d](double x) { return eval_d(d, x); }, tol);
}

// ---------------------------------------------------------------------------
// Wasserstein distances
// ---------------------------------------------------------------------------

/// W_p between u and rho delta_xbar. The coupling with a Dirac target is
/// unique, so this is exact for p in {1, 2}.
inline double wasserstein_to_dirac(const SystemState& s, double xbar, int p) {
    if (p != 1 && p != 2) throw std::invalid_argument("wasserstein_to_dirac: p must be 1 or 2");
    double acc = 0.0;
    for (std::size_t i = 0; i < s.u.size(); ++i) {
        const double gap = std::abs(s.grid.center(i) - xbar);
        acc += (p == 1 ? gap : gap * gap) * s.u[i];
    }
    acc *= s.grid.dx();
    return p == 1 ? acc : std::sqrt(acc);
}

/// Weighted point set on the half line.
struct PointMeasure {
    std::vector<double> x;
    std::vector<double> w;
};

inline PointMeasure to_point_measure(const SystemState& s) {
    PointMeasure m;
    m.x = s.grid.centers();
    m.w.resize(s.u.size());
    for (std::size_t i = 0; i < s.u.size(); ++i) m.w[i] = s.u[i] * s.grid.dx();
    return m;
}

/// W_p between two weighted point sets of equal total weight, via the
/// monotone (quantile) coupling.
inline double wasserstein_1d(PointMeasure a, PointMeasure b, int p) {
    auto sort_measure = [](PointMeasure& m) {
        std::vector<std::size_t> idx(m.x.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return m.x[i] < m.x[j]; });
        PointMeasure out;
        for (std::size_t i : idx) {
            if (m.w[i] <= 0.0) continue;
            out.x.push_back(m.x[i]);
            out.w.push_back(m.w[i]);
        }
        m = std::move(out);
    };
    sort_measure(a);
    sort_measure(b);
    const double ma = std::accumulate(a.w.begin(), a.w.end(), 0.0);
    const double mb = std::accumulate(b.w.begin(), b.w.end(), 0.0);
    if (std::abs(ma - mb) > 1e-9 * std::max(ma, mb))
        throw std::invalid_argument("wasserstein_1d: measures carry different total weight");
    if (ma == 0.0) return 0.0;

    std::size_t i = 0, j = 0;
    double ra = a.w.empty() ? 0.0 : a.w[0];
    double rb = b.w.empty() ? 0.0 : b.w[0];
    double acc = 0.0;
    while (i < a.x.size() && j < b.x.size()) {
        const double moved = std::min(ra, rb);
        const double gap = std::abs(a.x[i] - b.x[j]);
        acc += moved * std::pow(gap, p);
        ra -= moved;
        rb -= moved;
        if (ra <= 1e-15 * ma) {
            if (++i < a.x.size()) ra = a.w[i];
        }
        if (rb <= 1e-15 * ma) {
            if (++j < b.x.size()) rb = b.w[j];
        }
    }
    return std::pow(acc, 1.0 / p);
}

// ---------------------------------------------------------------------------
// Entropy functionals
// ---------------------------------------------------------------------------

/// k(x) = int_0^x d(s) ds.
inline double entropy_weight(const DepolyProfile& p, double x) {
    return std::visit(
        [x](const auto& f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, LinearIncreasing>) {
                return f.d0 * x + 0.5 * f.alpha * x * x;
            } else {
                const double tail = f.n == 1 ? std::log1p(x) : (1.0 - std::pow(1.0 + x, 1 - f.n)) / (f.n - 1);
                return f.d_inf * x + f.C_d * tail;
            }
        },
        p.form);
}

struct EntropyValue {
    double H = 0.0;
    bool clamped = false;  // V < d(0): K evaluated at d(0)
};

/// H = sum k(x_i) u_i dx + K(V) with K(v) = (v^2 - d(0)^2) / 2.
inline EntropyValue entropy_H(const SystemState& s, const DepolyProfile& d) {
    const double d0 = d_at_zero(d);
    EntropyValue out;
    double acc = 0.0;
    for (std::size_t i = 0; i < s.u.size(); ++i) acc += entropy_weight(d, s.grid.center(i)) * s.u[i];
    double v = s.V;
    if (v < d0) {
        v = d0;
        out.clamped = true;
    }
    out.H = acc * s.grid.dx() + 0.5 * (v * v - d0 * d0);
    return out;
}

/// sum (V - d(x_i))^2 u_i dx, the dissipation rate of H.
inline double entropy_dissipation(const SystemState& s, const DepolyProfile& d) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s.u.size(); ++i) {
        const double v = s.V - eval_d(d, s.grid.center(i));
        acc += v * v * s.u[i];
    }
    return acc * s.grid.dx();
}

// ---------------------------------------------------------------------------
// Rate estimators
// ---------------------------------------------------------------------------

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

inline LinearFit linear_regression(std::span<const double> xs, std::span<const double> ys) {
    const std::size_t n = xs.size();
    if (n < 2 || ys.size() != n) throw std::invalid_argument("linear_regression: need >= 2 paired points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("linear_regression: degenerate abscissae");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ys[i] - (f.intercept + f.slope * xs[i]);
        ssr += r * r;
    }
    f.r2 = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
    return f;
}

enum class Theorem { T23, T24_d0pos, T24_d0zero, T26, L39 };

inline const char* to_string(Theorem t) {
    switch (t) {
    case Theorem::T23: return "T23";
    case Theorem::T24_d0pos: return "T24_d0pos";
    case Theorem::T24_d0zero: return "T24_d0zero";
    case Theorem::T26: return "T26";
    default: return "L39";
    }
}

inline std::optional<Theorem> theorem_from_string(const std::string& s) {
    for (Theorem t : {Theorem::T23, Theorem::T24_d0pos, Theorem::T24_d0zero, Theorem::T26, Theorem::L39})
        if (s == to_string(t)) return t;
    return std::nullopt;
}

struct FitWindow {
    double t_lo = std::numeric_limits<double>::quiet_NaN();  // NaN: trailing half
    double t_hi = std::numeric_limits<double>::quiet_NaN();
};

struct RateFitReport {
    enum class Kind { Limit, UpperEnvelope };

    std::string estimator;
    double fitted = 0.0;
    double theory = 0.0;
    double relative_error = 0.0;
    double t_lo = 0.0;
    double t_hi = 0.0;
    double quality = 0.0;  // R^2 of the underlying regression
    Kind kind = Kind::Limit;
};

namespace detail {

inline RateFitReport make_report(std::string name, double fitted, double theory, double lo, double hi, double q) {
    RateFitReport r;
    r.estimator = std::move(name);
    r.fitted = fitted;
    r.theory = theory;
    r.relative_error = theory != 0.0 ? std::abs(fitted - theory) / std::abs(theory) : std::abs(fitted);
    r.t_lo = lo;
    r.t_hi = hi;
    r.quality = q;
    return r;
}

} // namespace detail

/// Least-squares estimators of the asymptotic functionals over a fit window
/// (trailing half of the series by default). Limits of f(t) are estimated as
/// the intercept of a regression of f against 1/t; growth limits rho/t^q as
/// the slope of rho against t^q; exponential rates as slopes of logarithms.
inline std::vector<RateFitReport> fit_rates(const TimeSeries& series, const RateModel& model, Theorem theorem,
                                            FitWindow window = {}) {
    if (series.samples.size() < 3) throw Error("fit_rates: series too short");
    const double t_end = series.back().t;
    const double lo = std::isnan(window.t_lo) ? 0.5 * t_end : window.t_lo;
    const double hi = std::isnan(window.t_hi) ? t_end : window.t_hi;

    std::vector<const Sample*> win;
    for (const auto& s : series.samples)
        if (s.t >= lo - 1e-12 && s.t <= hi + 1e-12 && s.t > 0.0) win.push_back(&s);
    if (win.size() < 3) throw Error("fit_rates: fit window [" + std::to_string(lo) + ", " + std::to_string(hi) +
                                    "] holds fewer than 3 samples");
    for (const auto* s : win)
        if (!std::isfinite(s->V) || !std::isfinite(s->rho)) throw Error("fit_rates: non-finite series values");

    const double M = series.M;
    const double d0 = d_at_zero(model.d);
    const double dp0 = eval_d_prime(model.d, 0.0);
    const int i0 = model.nucleation.i0;

    auto column = [&](auto&& fn) {
        std::vector<double> out;
        out.reserve(win.size());
        for (const auto* s : win) out.push_back(fn(*s));
        return out;
    };
    const auto ts = column([](const Sample& s) { return s.t; });
    const auto inv_t = column([](const Sample& s) { return 1.0 / s.t; });

    std::vector<RateFitReport> out;
    switch (theorem) {
    case Theorem::T23: {
        if (!model.d.increasing()) throw Error("fit_rates T23: requires increasing d");
        const double alpha = eval_d_prime(model.d, 0.0);
        for (const auto* s : win)
            if (!(s->W2 > 0.0)) throw Error("fit_rates T23: series lacks a positive W2 column");
        const auto logw = column([](const Sample& s) { return std::log(s.W2); });
        const auto f = linear_regression(ts, logw);
        out.push_back(detail::make_report("W2_log_slope", f.slope, -alpha, lo, hi, f.r2));
        const auto crit = predict_xbar(M, series.samples.front().rho, model.d);
        out.push_back(detail::make_report("V_limit", win.back()->V, crit.Vbar, lo, hi, 1.0));
        break;
    }
    case Theorem::T24_d0pos: {
        if (!(d0 > 0.0)) throw Error("fit_rates T24_d0pos: requires d(0) > 0");
        const auto rho = column([](const Sample& s) { return s.rho; });
        const auto f1 = linear_regression(ts, rho);
        out.push_back(detail::make_report("rho_over_t", f1.slope, std::pow(d0, i0), lo, hi, f1.r2));
        const auto tv = column([d0](const Sample& s) { return s.t * (s.V - d0); });
        const auto f2 = linear_regression(inv_t, tv);
        out.push_back(detail::make_report("t_times_V_minus_d0", f2.intercept, dp0 / std::pow(d0, i0) * (M - d0), lo,
                                          hi, f2.r2));
        break;
    }
    case Theorem::T24_d0zero: {
        if (d0 != 0.0) throw Error("fit_rates T24_d0zero: requires d(0) = 0");
        const double q = 1.0 / (i0 + 1.0);
        const auto tq = column([q](const Sample& s) { return std::pow(s.t, q); });
        const auto rho = column([](const Sample& s) { return s.rho; });
        const auto f1 = linear_regression(tq, rho);
        out.push_back(detail::make_report("rho_over_t_pow", f1.slope,
                                          std::pow(1.0 + i0, q) * std::pow(dp0 * M, i0 * q), lo, hi, f1.r2));
        const auto tqv = column([q](const Sample& s) { return std::pow(s.t, q) * s.V; });
        const auto f2 = linear_regression(inv_t, tqv);
        out.push_back(
            detail::make_report("t_pow_times_V", f2.intercept, std::pow(dp0 * M / (1.0 + i0), q), lo, hi, f2.r2));
        break;
    }
    case Theorem::T26: {
        const double Bm = B_lower(model.frag, 0.0);
        const auto logr = column([](const Sample& s) { return std::log(s.rho); });
        const auto f = linear_regression(ts, logr);
        out.push_back(detail::make_report("log_rho_rate", f.slope, Bm, lo, hi, f.r2));
        // Envelope constant from the first half of the window, then tested at the end.
        double C = 0.0;
        const double t_mid = 0.5 * (lo + hi);
        for (const auto* s : win)
            if (s->t <= t_mid) C = std::max(C, (s->V - d0) / (s->t * std::exp(-Bm * s->t)));
        const auto* last = win.back();
        auto r = detail::make_report("V_minus_d0_envelope", last->V - d0, C * last->t * std::exp(-Bm * last->t), lo,
                                     hi, 1.0);
        r.kind = RateFitReport::Kind::UpperEnvelope;
        out.push_back(r);
        break;
    }
    case Theorem::L39: {
        const auto pv = column([d0](const Sample& s) { return s.rho * (s.V - d0); });
        const auto f = linear_regression(inv_t, pv);
        out.push_back(detail::make_report("rho_times_V_minus_d0", f.intercept, dp0 * (M - d0), lo, hi, f.r2));
        break;
    }
    }
    return out;
}

struct M2DecayResult {
    bool pass = false;
    double decay_constant = 0.0;  // fitted exponential rate of M2
    double ratio = 0.0;           // M2(t_end) / M2(0)
};

/// Checks M2(t_end) < M2(0)/100 and fits log M2 over the initial decay phase,
/// from t = 0 until M2 first drops below M2(0)/100.
inline M2DecayResult m2_decay_check(const TimeSeries& series, Regime regime) {
    if (regime != Regime::Increasing) throw Error("m2_decay_check: only defined for increasing d");
    if (series.samples.size() < 3) throw Error("m2_decay_check: series too short");
    M2DecayResult r;
    const double m20 = series.samples.front().M2;
    if (m20 == 0.0) {
        r.pass = std::all_of(series.samples.begin(), series.samples.end(),
                             [](const Sample& s) { return s.M2 == 0.0; });
        return r;
    }
    r.ratio = series.back().M2 / m20;
    r.pass = r.ratio < 0.01;
    std::vector<double> ts, logs;
    for (const auto& s : series.samples) {
        if (!(s.M2 > 0.0)) break;
        ts.push_back(s.t);
        logs.push_back(std::log(s.M2));
        if (s.M2 <= 0.01 * m20) break;
    }
    if (ts.size() >= 2) r.decay_constant = -linear_regression(ts, logs).slope;
    return r;
}

} // namespace polykin
