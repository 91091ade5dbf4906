#pragma once

// Parametric reaction-rate profiles: depolymerization d(x), fragmentation
// rate B(x) with its daughter kernel, and the nucleation boundary data.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "polykin/error.hpp"

namespace polykin {

// ---------------------------------------------------------------------------
// Depolymerization
// ---------------------------------------------------------------------------

/// d(x) = d0 + alpha * x, with alpha > 0.
struct LinearIncreasing {
    double d0 = 0.0;
    double alpha = 1.0;
};

/// d(x) = d_inf + C_d * (1 + x)^(-n), strictly decreasing towards d_inf.
struct DecayingInverse {
    double d_inf = 0.0;
    double C_d = 1.0;
    int n = 1;
};

struct DepolyProfile {
    std::variant<LinearIncreasing, DecayingInverse> form;

    bool increasing() const { return std::holds_alternative<LinearIncreasing>(form); }
};

inline void check_profile(const DepolyProfile& p) {
    std::visit(
        [](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, LinearIncreasing>) {
                if (!(f.d0 >= 0.0)) throw ValidationError("linear depolymerization: d0 must be >= 0");
                if (!(f.alpha > 0.0)) throw ValidationError("linear depolymerization: alpha must be > 0");
            } else {
                if (!(f.d_inf > 0.0)) throw ValidationError("decaying depolymerization: d_inf must be > 0");
                if (!(f.C_d > 0.0)) throw ValidationError("decaying depolymerization: C_d must be > 0");
                if (f.n < 1) throw ValidationError("decaying depolymerization: n must be a positive integer");
            }
        },
        p.form);
}

inline double eval_d(const DepolyProfile& p, double x) {
    if (!(x >= 0.0)) throw std::invalid_argument("eval_d: size must be non-negative");
    return std::visit(
        [x](const auto& f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, LinearIncreasing>) {
                return f.d0 + f.alpha * x;
            } else {
                return f.d_inf + f.C_d * std::pow(1.0 + x, -f.n);
            }
        },
        p.form);
}

inline double eval_d_prime(const DepolyProfile& p, double x) {
    return std::visit(
        [x](const auto& f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, LinearIncreasing>) {
                return f.alpha;
            } else {
                return -f.n * f.C_d * std::pow(1.0 + x, -f.n - 1);
            }
        },
        p.form);
}

inline double d_at_zero(const DepolyProfile& p) { return eval_d(p, 0.0); }

/// inf over [0, inf) of d: d0 for the increasing family, d_inf for the decaying one.
inline double d_infimum(const DepolyProfile& p) {
    return std::visit(
        [](const auto& f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, LinearIncreasing>) {
                return f.d0;
            } else {
                return f.d_inf;
            }
        },
        p.form);
}

/// Inverse of d on its range. For the increasing family the range is
/// [d0, inf); for the decaying family it is (d_inf, d_inf + C_d].
inline double eval_d_inverse(const DepolyProfile& p, double v) {
    using Bound = OutOfRangeError::Bound;
    return std::visit(
        [v](const auto& f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, LinearIncreasing>) {
                if (!(v >= f.d0))
                    throw OutOfRangeError("eval_d_inverse: value below d(0) = " + std::to_string(f.d0),
                                          Bound::Lower);
                if (!std::isfinite(v))
                    throw OutOfRangeError("eval_d_inverse: non-finite value", Bound::Upper);
                return (v - f.d0) / f.alpha;
            } else {
                const double top = f.d_inf + f.C_d;
                if (!(v > f.d_inf))
                    throw OutOfRangeError("eval_d_inverse: value at or below inf d = " + std::to_string(f.d_inf),
                                          Bound::Lower);
                if (!(v <= top))
                    throw OutOfRangeError("eval_d_inverse: value above d(0) = " + std::to_string(top),
                                          Bound::Upper);
                return std::max(0.0, std::pow((v - f.d_inf) / f.C_d, -1.0 / f.n) - 1.0);
            }
        },
        p.form);
}

// ---------------------------------------------------------------------------
// Fragmentation
// ---------------------------------------------------------------------------

/// B(x) = B_m. B_m = 0 switches fragmentation off.
struct ConstantRate {
    double B_m = 0.0;
};

/// B(x) = b * min(x, x_sat)^gamma.
struct SaturatedPower {
    double b = 1.0;
    double gamma = 1.0;
    double x_sat = 1.0;
};

/// Binary splitting with uniform daughter distribution: kappa(y, x) = 1/y on [0, y].
struct UniformKernel {};

struct FragProfile {
    std::variant<ConstantRate, SaturatedPower> rate;
    std::variant<UniformKernel> kernel;

    bool vanishes() const {
        const auto* c = std::get_if<ConstantRate>(&rate);
        return c != nullptr && c->B_m == 0.0;
    }
};

inline void check_profile(const FragProfile& f) {
    std::visit(
        [](const auto& r) {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, ConstantRate>) {
                if (!(r.B_m >= 0.0)) throw ValidationError("constant fragmentation rate must be >= 0");
            } else {
                if (!(r.b > 0.0) || !(r.gamma > 0.0) || !(r.x_sat > 0.0))
                    throw ValidationError("saturated power fragmentation: b, gamma, x_sat must be > 0");
            }
        },
        f.rate);
}

inline double eval_B(const FragProfile& f, double x) {
    return std::visit(
        [x](const auto& r) -> double {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, ConstantRate>) {
                return r.B_m;
            } else {
                return r.b * std::pow(std::min(std::max(x, 0.0), r.x_sat), r.gamma);
            }
        },
        f.rate);
}

/// sup_x B(x).
inline double B_sup(const FragProfile& f) {
    return std::visit(
        [](const auto& r) -> double {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, ConstantRate>) {
                return r.B_m;
            } else {
                return r.b * std::pow(r.x_sat, r.gamma);
            }
        },
        f.rate);
}

/// inf over x >= A of B(x).
inline double B_lower(const FragProfile& f, double A) {
    return std::visit(
        [A](const auto& r) -> double {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, ConstantRate>) {
                return r.B_m;
            } else {
                return r.b * std::pow(std::min(std::max(A, 0.0), r.x_sat), r.gamma);
            }
        },
        f.rate);
}

/// Daughter density kappa(y, x) for 0 <= x <= y.
inline double kernel_density(const FragProfile&, double y, double x) {
    if (x < 0.0 || x > y) return 0.0;
    return 1.0 / y;
}

/// int_0^x kappa(y, z) (z/y)^k dz.
inline double kernel_partial_moment(const FragProfile&, double y, double x, int k) {
    if (!(y > 0.0)) throw std::invalid_argument("kernel_partial_moment: y must be > 0");
    if (!(x >= 0.0)) throw std::invalid_argument("kernel_partial_moment: x must be >= 0");
    if (x > y) throw std::invalid_argument("kernel_partial_moment: x must not exceed y");
    if (k < 0) throw std::invalid_argument("kernel_partial_moment: k must be >= 0");
    return std::pow(x / y, k + 1) / (k + 1);
}

/// a_k(x) = 1 - 2 int_0^x kappa(x, y) (y/x)^k dy.
inline double a_coefficient(const FragProfile& f, double x, int k) {
    if (!(x > 0.0)) throw std::invalid_argument("a_coefficient: x must be > 0");
    return 1.0 - 2.0 * kernel_partial_moment(f, x, x, k);
}

// ---------------------------------------------------------------------------
// Nucleation and the combined model
// ---------------------------------------------------------------------------

struct NucleationSpec {
    int epsilon = 0;
    int i0 = 1;
};

inline void check_nucleation(const NucleationSpec& n) {
    if (n.epsilon != 0 && n.epsilon != 1) throw ValidationError("nucleation epsilon must be 0 or 1");
    if (n.i0 < 1) throw ValidationError("nucleation i0 must be a positive integer");
}

/// Boundary inflow at x = 0. The indicator is strict: V == d(0) gives zero.
inline double nucleation_flux(const NucleationSpec& n, double V, double d0) {
    if (n.epsilon == 0 || !(V - d0 > 0.0)) return 0.0;
    return std::pow(V, n.i0);
}

struct RateModel {
    DepolyProfile d;
    FragProfile frag;
    NucleationSpec nucleation;
};

// ---------------------------------------------------------------------------
// Assumption checks
// ---------------------------------------------------------------------------

enum class Regime { Increasing, DecreasingWithFragmentation };

inline const char* to_string(Regime r) {
    return r == Regime::Increasing ? "increasing" : "decreasing_with_fragmentation";
}

enum class CheckStatus { Pass, Fail, NotApplicable };

inline const char* to_string(CheckStatus s) {
    switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    default: return "n/a";
    }
}

struct AssumptionCheck {
    std::string label;  // e.g. "d_slope_bounds: 0 < alpha <= d' <= beta"
    CheckStatus status = CheckStatus::NotApplicable;
    std::string detail;
};

struct ValidityReport {
    Regime regime = Regime::Increasing;
    std::vector<AssumptionCheck> checks;
    // Witness constants; NaN when not applicable.
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double beta = std::numeric_limits<double>::quiet_NaN();
    double B_m = std::numeric_limits<double>::quiet_NaN();
    double B_M = std::numeric_limits<double>::quiet_NaN();
    double A = std::numeric_limits<double>::quiet_NaN();
    double c = std::numeric_limits<double>::quiet_NaN();
    double gamma = std::numeric_limits<double>::quiet_NaN();
    double C = std::numeric_limits<double>::quiet_NaN();

    bool all_pass() const {
        return std::none_of(checks.begin(), checks.end(),
                            [](const AssumptionCheck& c) { return c.status == CheckStatus::Fail; });
    }

    const AssumptionCheck* first_failure() const {
        for (const auto& c : checks)
            if (c.status == CheckStatus::Fail) return &c;
        return nullptr;
    }
};

namespace detail {

inline std::vector<double> sample_sizes() {
    std::vector<double> xs;
    for (int i = 0; i <= 400; ++i) xs.push_back(1e-3 * std::pow(1e6, i / 400.0) - 1e-3);
    return xs;
}

inline AssumptionCheck check(std::string label, bool ok, std::string detail) {
    return {std::move(label), ok ? CheckStatus::Pass : CheckStatus::Fail, std::move(detail)};
}

} // namespace detail

inline ValidityReport validate_assumptions(const RateModel& model, Regime regime) {
    ValidityReport rep;
    rep.regime = regime;
    const auto xs = detail::sample_sizes();
    const auto& d = model.d;
    const auto& frag = model.frag;

    bool nuc_ok = model.nucleation.i0 >= 1 && (model.nucleation.epsilon == 0 || model.nucleation.epsilon == 1);
    rep.checks.push_back(detail::check("nucleation: epsilon in {0,1}, i0 >= 1", nuc_ok,
                                       "epsilon=" + std::to_string(model.nucleation.epsilon) +
                                           " i0=" + std::to_string(model.nucleation.i0)));

    // Kernel normalization and mass splitting: int kappa = 1, int x kappa = y/2.
    {
        double worst = 0.0;
        for (double y : {1e-3, 0.5, 1.0, 7.0, 1e3}) {
            worst = std::max(worst, std::abs(kernel_partial_moment(frag, y, y, 0) - 1.0));
            worst = std::max(worst, std::abs(kernel_partial_moment(frag, y, y, 1) - 0.5));
        }
        rep.checks.push_back(detail::check("kernel_normalization: int kappa = 1, int x kappa = y/2", worst == 0.0,
                                           "max deviation " + std::to_string(worst)));
    }
    rep.B_M = B_sup(frag);

    if (regime == Regime::Increasing) {
        if (const auto* lin = std::get_if<LinearIncreasing>(&d.form)) {
            rep.alpha = lin->alpha;
            rep.beta = lin->alpha;
            rep.checks.push_back(detail::check("d_slope_bounds: 0 < alpha <= d'(x) <= beta", lin->alpha > 0.0 && lin->d0 >= 0.0,
                                               "alpha=beta=" + std::to_string(lin->alpha)));
        } else {
            rep.checks.push_back(detail::check("d_slope_bounds: 0 < alpha <= d'(x) <= beta", false, "d is decreasing"));
        }
        if (frag.vanishes()) {
            rep.checks.push_back({"B_lower_bound: B(x) >= B_m > 0", CheckStatus::NotApplicable, "B identically zero"});
        } else {
            const double bm = B_lower(frag, 0.0);
            rep.B_m = bm;
            rep.checks.push_back(detail::check("B_lower_bound: B(x) >= B_m > 0", bm > 0.0, "B_m=" + std::to_string(bm)));
        }
        return rep;
    }

    // Decreasing depolymerization balanced by fragmentation.
    if (const auto* dec = std::get_if<DecayingInverse>(&d.form)) {
        bool decreasing = true;
        for (std::size_t i = 1; i < xs.size(); ++i)
            if (!(eval_d(d, xs[i]) < eval_d(d, xs[i - 1]) || eval_d_prime(d, xs[i]) < 0.0)) decreasing = false;
        rep.checks.push_back(detail::check("d_decreasing: d strictly decreasing", decreasing, "sampled on [0, 1e3]"));

        bool tail = dec->d_inf > 0.0 && dec->C_d > 0.0;
        const double cst = dec->C_d * std::pow(2.0, -dec->n);
        for (double x : xs)
            if (x >= 1.0 && eval_d(d, x) - dec->d_inf < cst * std::pow(x, -dec->n) * (1.0 - 1e-12)) tail = false;
        rep.checks.push_back(detail::check("d_tail: d > 0 and d(x) - d(inf) >= C x^-n for x >= 1", tail,
                                           "C=" + std::to_string(cst) + " n=" + std::to_string(dec->n)));
    } else {
        rep.checks.push_back(detail::check("d_decreasing: d strictly decreasing", false, "d is increasing"));
        rep.checks.push_back(detail::check("d_tail: d > 0 and d(x) - d(inf) >= C x^-n for x >= 1", false,
                                           "d is increasing"));
    }

    {
        const double c = a_coefficient(frag, 1.0, 2);
        rep.c = c;
        rep.checks.push_back(detail::check("kernel_moment: a_2(x) >= c > 0", c > 0.0, "c=" + std::to_string(c)));
    }
    {
        // Any A > 0 works for both families; report A = 1.
        const double A = 1.0;
        const double bm = B_lower(frag, A);
        rep.A = A;
        rep.B_m = bm;
        rep.checks.push_back(
            detail::check("B_positive_tail: B(x >= A) >= B_m > 0", bm > 0.0, "A=1 B_m=" + std::to_string(bm)));
    }
    rep.checks.push_back(detail::check("B_bounded: sup B = B_M < inf", std::isfinite(rep.B_M) && rep.B_M > 0.0,
                                       "B_M=" + std::to_string(rep.B_M)));
    if (const auto* sp = std::get_if<SaturatedPower>(&frag.rate)) {
        // Uniform kernel satisfies the tail bound with exponent 1 and C = 1, so the
        // common exponent is min(gamma, 1).
        rep.gamma = std::min(sp->gamma, 1.0);
        rep.C = 1.0;
        rep.checks.push_back(detail::check("B_power: B(x) x^-gamma bounded", true,
                                           "sup B x^-gamma <= " + std::to_string(sp->b)));
        rep.checks.push_back(detail::check("kernel_holder: |int_x^x0 kappa(y,z) dz| <= C |x-x0|^gamma / y^gamma", true,
                                           "uniform kernel, C=1, gamma=" + std::to_string(rep.gamma)));
    } else {
        rep.checks.push_back(detail::check("B_power: B(x) x^-gamma bounded", false, "constant B > 0 near x = 0"));
        rep.checks.push_back({"kernel_holder: |int_x^x0 kappa(y,z) dz| <= C |x-x0|^gamma / y^gamma", CheckStatus::NotApplicable,
                              "needs B_power"});
    }
    return rep;
}

} // namespace polykin
