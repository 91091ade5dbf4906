#pragma once

// Positive steady states for decreasing depolymerization balanced by
// fragmentation. The monomer level V-bar is the zero of the principal
// eigenvalue lambda(V) of the linear growth/fragmentation generator.
//
// Two constructions:
//   Direct:   one Perron pair of the generator on the whole grid [0, R].
//   Faithful: a Perron pair on [x0 + eps, R] with a boundary inflow row,
//             where x0 = d^-1(V) is the stall size, followed by a leftward
//             march that extends the solution down to x = 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "polykin/error.hpp"
#include "polykin/fragmentation.hpp"
#include "polykin/rates.hpp"

namespace polykin {

enum class SteadyPath { Direct, Faithful };

inline const char* to_string(SteadyPath p) { return p == SteadyPath::Direct ? "direct" : "faithful"; }

/// Generator A of  d/dt U = -(d/dx)((V - d) U) - B U + gain, discretized on
/// n uniform cells of [a, R]. Transport is upwind on the local velocity sign.
/// The gain of cell i from source j >= i is coeff[j] (uniform kernel).
struct TruncatedEigenProblem {
    SteadyPath path = SteadyPath::Direct;
    double V = 0.0;
    double R = 0.0;
    double eps = 0.0;  // offset of the left end above x0 (faithful path)
    double x0 = 0.0;   // stall size d^-1(V)
    double a = 0.0;    // left end of the grid
    double h = 0.0;
    std::size_t n = 0;
    std::vector<double> v_face;  // V - d at the n + 1 faces
    std::vector<double> loss;    // B at centres
    std::vector<double> coeff;   // gain column values
    double inflow = 0.0;         // faithful path: F_0 = inflow * sum_j U_j h

    double center(std::size_t i) const { return a + (static_cast<double>(i) + 0.5) * h; }
};

/// Face fluxes of the transport part for a given U.
inline std::vector<double> transport_fluxes(const TruncatedEigenProblem& p, const std::vector<double>& U) {
    const std::size_t n = p.n;
    std::vector<double> F(n + 1, 0.0);
    if (p.path == SteadyPath::Faithful) {
        double total = 0.0;
        for (double u : U) total += u;
        F[0] = p.inflow * total * p.h;
    } else {
        F[0] = p.v_face[0] < 0.0 ? p.v_face[0] * U[0] : 0.0;
    }
    for (std::size_t f = 1; f < n; ++f) F[f] = p.v_face[f] > 0.0 ? p.v_face[f] * U[f - 1] : p.v_face[f] * U[f];
    F[n] = p.v_face[n] > 0.0 ? p.v_face[n] * U[n - 1] : 0.0;
    return F;
}

/// A U in O(n).
inline std::vector<double> apply_generator(const TruncatedEigenProblem& p, const std::vector<double>& U) {
    const auto F = transport_fluxes(p, U);
    std::vector<double> out(p.n);
    double suffix = 0.0;
    for (std::size_t k = p.n; k-- > 0;) {
        suffix += p.coeff[k] * U[k];
        out[k] = (F[k] - F[k + 1]) / p.h - p.loss[k] * U[k] + suffix;
    }
    return out;
}

/// Dense copy of A, for small-n inspection.
inline Eigen::MatrixXd dense_generator(const TruncatedEigenProblem& p) {
    Eigen::MatrixXd A(p.n, p.n);
    std::vector<double> e(p.n, 0.0);
    for (std::size_t j = 0; j < p.n; ++j) {
        e[j] = 1.0;
        const auto col = apply_generator(p, e);
        for (std::size_t i = 0; i < p.n; ++i) A(i, j) = col[i];
        e[j] = 0.0;
    }
    return A;
}

inline void check_steady_V(const DepolyProfile& d, double V) {
    if (d.increasing()) throw ValidationError("steady: requires a decreasing depolymerization rate");
    const double lo = d_infimum(d), hi = d_at_zero(d);
    if (!(V > lo && V < hi))
        throw OutOfRangeError("steady: V = " + std::to_string(V) + " outside (" + std::to_string(lo) + ", " +
                                  std::to_string(hi) + ")",
                              V <= lo ? OutOfRangeError::Bound::Lower : OutOfRangeError::Bound::Upper);
}

/// Assembles A for the given path. For the faithful path the grid is
/// [x0 + eps, R] with n cells; for the direct path it is [0, R].
inline TruncatedEigenProblem assemble_generator(double V, double R, double eps, std::size_t n, const RateModel& model,
                                                SteadyPath path) {
    check_steady_V(model.d, V);
    if (n < 2) throw std::invalid_argument("assemble_generator: need n >= 2");
    TruncatedEigenProblem p;
    p.path = path;
    p.V = V;
    p.R = R;
    p.eps = eps;
    p.x0 = eval_d_inverse(model.d, V);
    p.a = path == SteadyPath::Faithful ? p.x0 + eps : 0.0;
    if (!(R > p.a)) throw ValidationError("assemble_generator: R must exceed x0 + eps");
    p.n = n;
    p.h = (R - p.a) / static_cast<double>(n);
    p.v_face.resize(n + 1);
    for (std::size_t f = 0; f <= n; ++f) p.v_face[f] = V - eval_d(model.d, p.a + static_cast<double>(f) * p.h);
    auto cols = gain_columns(p.a, p.h, n, model.frag);
    p.loss = std::move(cols.loss);
    p.coeff = std::move(cols.coeff);
    if (path == SteadyPath::Faithful) p.inflow = eps;
    return p;
}

struct Eigenpair {
    double lambda = 0.0;
    std::vector<double> U;  // normalized to sum U h = 1
    int iterations = 0;
    double residual = 0.0;  // ||A U - lambda U||_1 / ||U||_1
    double mu = 0.0;        // final shift
};

struct EigenOptions {
    double tol = 1e-12;  // relative residual target
    int max_iterations = 500;
    double mu = std::numeric_limits<double>::quiet_NaN();  // NaN: use the default bound
};

/// 2 (B_M + max|d'| + max|V - d| / h), an upper bound on the spectral abscissa.
inline double default_shift(const TruncatedEigenProblem& p, const RateModel& model) {
    double bmax = 0.0, vmax = 0.0, dpmax = 0.0;
    for (double b : p.loss) bmax = std::max(bmax, b);
    for (double v : p.v_face) vmax = std::max(vmax, std::abs(v));
    for (std::size_t f = 0; f <= p.n; ++f)
        dpmax = std::max(dpmax, std::abs(eval_d_prime(model.d, p.a + static_cast<double>(f) * p.h)));
    return 2.0 * (bmax + dpmax + vmax / p.h);
}

/// Iteration failure. upper_bound() is a proven upper bound on the principal
/// eigenvalue (the last safe shift), which still certifies its sign when
/// negative.
class EigenConvergenceError : public ConvergenceError {
public:
    EigenConvergenceError(const std::string& what, double upper_bound)
        : ConvergenceError(what), upper_bound_(upper_bound) {}

    double upper_bound() const noexcept { return upper_bound_; }

private:
    double upper_bound_;
};

namespace detail {

/// (mu I - A) in augmented sparse form. Unknowns: y (n), suffix gains
/// s_i = s_{i+1} + c_i y_i (n), and suffix sums r_i = r_{i+1} + y_i (n).
class ShiftedSolver {
public:
    ShiftedSolver(const TruncatedEigenProblem& p, double mu) : n_(p.n) {
        const std::size_t n = p.n;
        std::vector<Eigen::Triplet<double>> t;
        t.reserve(10 * n);
        const double ih = 1.0 / p.h;
        auto Y = [](std::size_t i) { return static_cast<int>(i); };
        auto S = [n](std::size_t i) { return static_cast<int>(n + i); };
        auto Rr = [n](std::size_t i) { return static_cast<int>(2 * n + i); };
        for (std::size_t i = 0; i < n; ++i) {
            const int row = Y(i);
            t.emplace_back(row, Y(i), mu + p.loss[i]);
            t.emplace_back(row, S(i), -1.0);
            // (mu - A) contains +(F_{i+1} - F_i)/h.
            const double vr = p.v_face[i + 1];
            if (i + 1 < n) {
                if (vr > 0.0)
                    t.emplace_back(row, Y(i), vr * ih);
                else
                    t.emplace_back(row, Y(i + 1), vr * ih);
            } else if (vr > 0.0) {
                t.emplace_back(row, Y(i), vr * ih);
            }
            const double vl = p.v_face[i];
            if (i > 0) {
                if (vl > 0.0)
                    t.emplace_back(row, Y(i - 1), -vl * ih);
                else
                    t.emplace_back(row, Y(i), -vl * ih);
            } else if (p.path == SteadyPath::Faithful) {
                t.emplace_back(row, Rr(0), -p.inflow);
            } else if (vl < 0.0) {
                t.emplace_back(row, Y(0), -vl * ih);
            }
            t.emplace_back(S(i), S(i), 1.0);
            if (i + 1 < n) t.emplace_back(S(i), S(i + 1), -1.0);
            if (p.coeff[i] != 0.0) t.emplace_back(S(i), Y(i), -p.coeff[i]);
            t.emplace_back(Rr(i), Rr(i), 1.0);
            if (i + 1 < n) t.emplace_back(Rr(i), Rr(i + 1), -1.0);
            t.emplace_back(Rr(i), Y(i), -1.0);
        }
        Eigen::SparseMatrix<double> M(static_cast<int>(3 * n), static_cast<int>(3 * n));
        M.setFromTriplets(t.begin(), t.end());
        M.makeCompressed();
        lu_.analyzePattern(M);
        lu_.factorize(M);
        if (lu_.info() != Eigen::Success) throw ConvergenceError("principal_eigenpair: shifted matrix is singular");
    }

    std::vector<double> solve(const std::vector<double>& w) {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(3 * n_));
        for (std::size_t i = 0; i < n_; ++i) rhs[static_cast<Eigen::Index>(i)] = w[i];
        Eigen::VectorXd x = lu_.solve(rhs);
        std::vector<double> y(n_);
        for (std::size_t i = 0; i < n_; ++i) y[i] = x[static_cast<Eigen::Index>(i)];
        return y;
    }

private:
    std::size_t n_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
};

inline double l1(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += std::abs(x);
    return acc;
}

} // namespace detail

/// Perron pair of A by shifted inverse iteration w <- (mu - A)^-1 w.
///
/// The shift starts at the default bound. It is then lowered towards the
/// eigenvalue, either to the Collatz-Wielandt upper bound max_i (A w)_i / w_i,
/// which is always safe, or to lambda + 10 * residual, which is a guess. A
/// guess that turns out to lie below the spectrum shows up as a loss of
/// positivity; the iteration then returns to the last safe shift and stops
/// guessing.
inline Eigenpair principal_eigenpair(const TruncatedEigenProblem& p, const RateModel& model,
                                     const EigenOptions& opt = {}, const std::vector<double>* start = nullptr) {
    const std::size_t n = p.n;
    double mu = std::isnan(opt.mu) ? default_shift(p, model) : opt.mu;
    double mu_safe = mu;
    bool guessing = true;
    std::vector<double> w = start && start->size() == n ? *start : std::vector<double>(n, 1.0);
    for (double& x : w) x = std::max(x, 0.0);
    if (detail::l1(w) == 0.0) w.assign(n, 1.0);
    {
        const double s = detail::l1(w);
        for (double& x : w) x /= s;
    }

    std::unique_ptr<detail::ShiftedSolver> solver;
    auto refactor = [&](double m) {
        try {
            solver = std::make_unique<detail::ShiftedSolver>(p, m);
            return true;
        } catch (const ConvergenceError&) {
            return false;
        }
    };
    auto retreat = [&](const char* why) {
        if (mu == mu_safe || !guessing) throw EigenConvergenceError(std::string("principal_eigenpair: ") + why, mu_safe);
        guessing = false;
        mu = mu_safe;
        if (!refactor(mu)) throw ConvergenceError("principal_eigenpair: shifted matrix is singular");
    };
    if (!refactor(mu)) throw ConvergenceError("principal_eigenpair: shifted matrix is singular");

    Eigenpair out;
    double lambda_prev = std::numeric_limits<double>::quiet_NaN();
    for (int it = 1; it <= opt.max_iterations; ++it) {
        auto y = solver->solve(w);
        double ymax = 0.0, ymin = 0.0;
        bool finite = true;
        for (double v : y) {
            ymax = std::max(ymax, v);
            ymin = std::min(ymin, v);
            finite = finite && std::isfinite(v);
        }
        if (!finite || !(ymax > 0.0)) {
            retreat("iterate lost positivity");
            continue;
        }
        if (ymin < -1e-9 * ymax) {
            retreat("eigenvector changes sign (discretization defect)");
            continue;
        }
        for (double& v : y) v = std::max(v, 0.0);
        const double sy = detail::l1(y);
        for (double& v : y) v /= sy;
        w = std::move(y);

        const auto Aw = apply_generator(p, w);
        double lambda = 0.0;  // sum w = 1
        for (double v : Aw) lambda += v;
        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i) res += std::abs(Aw[i] - lambda * w[i]);
        out.lambda = lambda;
        out.residual = res;
        out.iterations = it;
        out.mu = mu;
        if (res <= opt.tol && std::abs(lambda - lambda_prev) <= opt.tol * std::max(1.0, std::abs(lambda))) break;
        lambda_prev = lambda;
        if (it == opt.max_iterations)
            throw EigenConvergenceError("principal_eigenpair: no convergence after " + std::to_string(it) +
                                            " iterations (residual " + std::to_string(res) + ")",
                                        mu_safe);

        double up = -std::numeric_limits<double>::infinity();
        double wmax = 0.0;
        for (double v : w) wmax = std::max(wmax, v);
        for (std::size_t i = 0; i < n; ++i)
            if (w[i] > 1e-200 * wmax) up = std::max(up, Aw[i] / w[i]);
        const double floor_gap = 1e-9 * std::max(1.0, std::abs(lambda));
        const double bound = up + floor_gap;
        double next = mu;
        if (bound < mu) {
            next = bound;
            mu_safe = bound;
        }
        if (guessing) next = std::min(next, lambda + std::max(10.0 * res, floor_gap));
        if (next < mu - 1e-3 * (mu - lambda)) {
            if (refactor(next)) {
                mu = next;
            } else if (!refactor(mu)) {
                throw ConvergenceError("principal_eigenpair: shifted matrix is singular");
            }
        }
    }
    out.U = std::move(w);
    for (double& v : out.U) v /= p.h;  // sum U h = 1
    return out;
}

// ---------------------------------------------------------------------------
// lambda(V) and the search for V-bar
// ---------------------------------------------------------------------------

struct SteadyOptions {
    SteadyPath path = SteadyPath::Direct;
    double R = 50.0;
    std::size_t n = 2000;
    double eps = std::numeric_limits<double>::quiet_NaN();  // NaN: 2 R / n
    double margin_fraction = 1e-3;
    int scan_points = 20;
    double lambda_tol = 1e-10;
    double tol_V = 1e-12;
    EigenOptions eigen;

    double offset() const { return std::isnan(eps) ? 2.0 * R / static_cast<double>(n) : eps; }
};

/// Carries the lambda(V) scan when no sign change was found.
class NoSignChangeError : public ConvergenceError {
public:
    NoSignChangeError(const std::string& what, std::vector<std::pair<double, double>> scan)
        : ConvergenceError(what), scan_(std::move(scan)) {}

    const std::vector<std::pair<double, double>>& scan() const noexcept { return scan_; }

private:
    std::vector<std::pair<double, double>> scan_;
};

struct LambdaEval {
    double V = 0.0;
    double lambda = std::numeric_limits<double>::quiet_NaN();
    Eigenpair pair;
    TruncatedEigenProblem problem;
    bool sign_only = false;  // lambda is a negative upper bound, not the eigenvalue
    std::string error;       // non-empty when the evaluation failed
};

/// Memoized lambda(V) for one model, path and resolution. Thread-safe.
class LambdaCurve {
public:
    LambdaCurve(RateModel model, SteadyOptions opt) : model_(std::move(model)), opt_(std::move(opt)) {}

    const RateModel& model() const { return model_; }
    const SteadyOptions& options() const { return opt_; }

    LambdaEval eval(double V) const {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto it = cache_.find(V);
            if (it != cache_.end()) return it->second;
        }
        LambdaEval e;
        e.V = V;
        try {
            e.problem = assemble_generator(V, opt_.R, opt_.offset(), opt_.n, model_, opt_.path);
            e.pair = principal_eigenpair(e.problem, model_, opt_.eigen);
            e.lambda = e.pair.lambda;
        } catch (const EigenConvergenceError& ex) {
            // Clustered spectrum far below zero: keep the certified sign.
            if (ex.upper_bound() < 0.0) {
                e.lambda = ex.upper_bound();
                e.sign_only = true;
            } else {
                e.error = ex.what();
            }
        } catch (const Error& ex) {
            e.error = ex.what();
        }
        std::lock_guard<std::mutex> lock(mutex_);
        return cache_.emplace(V, std::move(e)).first->second;
    }

    double lambda(double V) const { return eval(V).lambda; }

private:
    RateModel model_;
    SteadyOptions opt_;
    mutable std::mutex mutex_;
    mutable std::map<double, LambdaEval> cache_;
};

struct VbarResult {
    double Vbar = 0.0;
    LambdaEval at_root;
    std::vector<std::pair<double, double>> scan;  // (V, lambda)
    std::vector<double> roots;                    // every root found, ascending in V
    int bisections = 0;
};

/// Parallel scan of lambda on [d_inf + m, d(0) - m], then bisection in every
/// bracket with a sign change. V-bar is the lowest root.
inline VbarResult find_Vbar(const LambdaCurve& curve) {
    const auto& model = curve.model();
    const auto& opt = curve.options();
    if (model.d.increasing()) throw ValidationError("find_Vbar: requires a decreasing depolymerization rate");
    const double lo = d_infimum(model.d), hi = d_at_zero(model.d);
    const double m = opt.margin_fraction * (hi - lo);
    const int k = std::max(opt.scan_points, 2);

    std::vector<double> Vs(k);
    for (int i = 0; i < k; ++i) Vs[i] = lo + m + (hi - lo - 2.0 * m) * i / (k - 1);

    const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    std::vector<double> lam(k);
    for (int start = 0; start < k; start += static_cast<int>(workers)) {
        std::vector<std::future<double>> jobs;
        for (int i = start; i < std::min(k, start + static_cast<int>(workers)); ++i)
            jobs.push_back(std::async(std::launch::async, [&curve, V = Vs[i]] { return curve.lambda(V); }));
        for (int i = start; i < std::min(k, start + static_cast<int>(workers)); ++i) lam[i] = jobs[i - start].get();
    }

    VbarResult res;
    for (int i = 0; i < k; ++i) res.scan.emplace_back(Vs[i], lam[i]);

    for (int i = 0; i + 1 < k; ++i) {
        double a = Vs[i], b = Vs[i + 1];
        double fa = lam[i], fb = lam[i + 1];
        if (std::isnan(fa) || std::isnan(fb) || (fa > 0.0) == (fb > 0.0)) continue;
        double root = std::abs(fa) < std::abs(fb) ? a : b;
        double froot = std::abs(fa) < std::abs(fb) ? fa : fb;
        while (!(std::abs(froot) <= opt.lambda_tol && b - a <= opt.tol_V)) {
            const double mid = 0.5 * (a + b);
            if (mid <= a || mid >= b) break;
            const double fm = curve.lambda(mid);
            ++res.bisections;
            if (std::isnan(fm)) throw ConvergenceError("find_Vbar: eigen solve failed at V = " + std::to_string(mid));
            if ((fm > 0.0) == (fa > 0.0)) {
                a = mid;
                fa = fm;
            } else {
                b = mid;
                fb = fm;
            }
            root = std::abs(fa) <= std::abs(fb) ? a : b;
            froot = std::abs(fa) <= std::abs(fb) ? fa : fb;
            if (std::abs(froot) <= opt.lambda_tol && b - a <= 1e3 * opt.tol_V) break;
        }
        if (!(std::abs(froot) <= opt.lambda_tol))
            throw ConvergenceError("find_Vbar: bisection stalled with |lambda| = " + std::to_string(std::abs(froot)));
        res.roots.push_back(root);
    }
    if (res.roots.empty()) {
        std::string hint = "find_Vbar: no sign change of lambda(V) on the scan";
        if (B_lower(model.frag, 0.0) == 0.0 && B_sup(model.frag) == 0.0)
            hint += " (no fragmentation: lambda < 0 throughout)";
        else if (opt.R <= 1.0)
            hint += " (R at or below the size A beyond which B >= B_m > 0 is required)";
        throw NoSignChangeError(hint, res.scan);
    }
    res.Vbar = res.roots.front();
    res.at_root = curve.eval(res.Vbar);
    return res;
}

// ---------------------------------------------------------------------------
// Profiles on [0, R]
// ---------------------------------------------------------------------------

/// Piecewise-constant density: cell i has centre x[i], width dx[i], value U[i].
struct SteadyProfile {
    std::vector<double> x;
    std::vector<double> dx;
    std::vector<double> U;

    std::size_t size() const { return x.size(); }
    double integral(const std::function<double(double)>& f) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) acc += f(x[i]) * U[i] * dx[i];
        return acc;
    }
    double mass() const { return integral([](double) { return 1.0; }); }
    double first_moment() const { return integral([](double y) { return y; }); }
    void scale(double c) {
        for (double& v : U) v *= c;
    }
    /// Value at y by locating the cell; 0 outside.
    double at(double y) const {
        for (std::size_t i = 0; i < x.size(); ++i)
            if (y >= x[i] - 0.5 * dx[i] && y <= x[i] + 0.5 * dx[i]) return U[i];
        return 0.0;
    }
};

inline SteadyProfile profile_from_grid(const TruncatedEigenProblem& p, const std::vector<double>& U) {
    SteadyProfile s;
    for (std::size_t i = 0; i < p.n; ++i) {
        s.x.push_back(p.center(i));
        s.dx.push_back(p.h);
        s.U.push_back(U[i]);
    }
    return s;
}

struct ExtensionOptions {
    double delta = std::numeric_limits<double>::quiet_NaN();  // NaN: x0 / 4000
    double picard_tol = 1e-13;
    int picard_max = 100;
    int max_halvings = 10;
};

struct ExtensionResult {
    SteadyProfile profile;  // on [0, R], normalized to integral 1
    double delta = 0.0;
    int halvings = 0;
    double source_at_x0 = 0.0;  // 2 int_{x0}^R B U / y dy before renormalization
};

namespace detail {

// Leftward march of phi = (V - d) U from x0 to 0. Returns false when the
// per-interval Picard iteration fails to contract.
inline bool march_left(const Eigenpair& pair, const TruncatedEigenProblem& p, const RateModel& model, double S_A,
                       double delta, const ExtensionOptions& opt, std::vector<double>& nodes_x,
                       std::vector<double>& nodes_U) {
    const double V = p.V, x0 = p.x0, lam = pair.lambda;
    const std::size_t K = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(x0 / delta - 1e-9)));
    const double step = x0 / static_cast<double>(K);
    const double dp0 = eval_d_prime(model.d, x0);
    const double beta = (lam + eval_B(model.frag, x0)) / std::abs(dp0);

    nodes_x.assign(K + 1, 0.0);
    nodes_U.assign(K + 1, 0.0);
    nodes_x[0] = x0;
    nodes_U[0] = S_A / ((beta + 1.0) * std::abs(dp0));
    double phi = 0.0;
    double I = 0.0;  // 2 int_{x}^{x0} B U / y
    auto a_of = [&](double x) { return (lam + eval_B(model.frag, x)) / (V - eval_d(model.d, x)); };

    for (std::size_t k = 1; k <= K; ++k) {
        const double xr = x0 - static_cast<double>(k - 1) * step;
        const double xl = k == K ? 0.0 : x0 - static_cast<double>(k) * step;
        const double h = xr - xl;
        const double xm = 0.5 * (xl + xr);
        const double Bm = eval_B(model.frag, xm);
        const double vl = V - eval_d(model.d, xl);
        // Integral of a over [xl, xr] (Simpson); the first interval touches
        // the singular point and uses the local power law instead.
        double G = 0.0;
        if (k > 1) G = h / 6.0 * (a_of(xl) + 4.0 * a_of(xm) + a_of(xr));
        double Uk = nodes_U[k - 1];
        int it = 0;
        for (; it < opt.picard_max; ++it) {
            const double Um = 0.5 * (nodes_U[k - 1] + Uk);
            const double S = S_A + I + h * Bm * Um / xm;
            double phik;
            if (k == 1) {
                phik = -S * h / (beta + 1.0);
            } else {
                const double abar = G / h;
                const double e = std::exp(G);
                phik = e * phi + (S / abar) * (1.0 - e);
            }
            const double Unew = phik / vl;
            const bool done = std::abs(Unew - Uk) <= opt.picard_tol * std::max(std::abs(Unew), 1e-300);
            Uk = Unew;
            if (done) break;
        }
        if (it == opt.picard_max || !std::isfinite(Uk) || Uk < 0.0) return false;
        nodes_U[k] = Uk;
        nodes_x[k] = xl;
        phi = (V - eval_d(model.d, xl)) * Uk;
        I += 2.0 * h * Bm * 0.5 * (nodes_U[k - 1] + Uk) / xm;
    }
    return true;
}

} // namespace detail

/// Extends a faithful-path eigenpair from [x0 + eps, R] down to 0. The gap
/// (x0, x0 + eps) carries the linear interpolant of phi between 0 and the
/// inflow value.
inline ExtensionResult extend_to_zero(const Eigenpair& pair, const TruncatedEigenProblem& p, const RateModel& model,
                                      ExtensionOptions opt = {}) {
    if (p.path != SteadyPath::Faithful) throw std::invalid_argument("extend_to_zero: needs the faithful-path problem");
    const double x0 = p.x0;
    const double cond = -eval_B(model.frag, x0) + eval_d_prime(model.d, x0);
    if (!(pair.lambda > cond))
        throw ConvergenceError("extend_to_zero: extension requires lambda > -B(x0) + d'(x0); lambda = " +
                               std::to_string(pair.lambda) + ", bound = " + std::to_string(cond));

    // Gap cell and the constant source it and the grid deliver below x0.
    double total = 0.0;
    for (double u : pair.U) total += u * p.h;
    const double phi_eps = p.inflow * total;
    const double xg = x0 + 0.5 * p.eps;
    const double Ugap = p.eps > 0.0 ? 0.5 * phi_eps / (p.V - eval_d(model.d, xg)) : 0.0;
    double S_A = 0.0;
    for (std::size_t j = 0; j < p.n; ++j) {
        const double y = p.center(j);
        S_A += 2.0 * eval_B(model.frag, y) * pair.U[j] * p.h / y;
    }
    if (p.eps > 0.0) S_A += 2.0 * eval_B(model.frag, xg) * Ugap * p.eps / xg;

    ExtensionResult res;
    res.source_at_x0 = S_A;
    double delta = std::isnan(opt.delta) ? x0 / 4000.0 : opt.delta;
    std::vector<double> nx, nU;
    int halvings = 0;
    while (!detail::march_left(pair, p, model, S_A, delta, opt, nx, nU)) {
        if (++halvings > opt.max_halvings)
            throw ConvergenceError("extend_to_zero: Picard iteration does not contract after " +
                                   std::to_string(opt.max_halvings) + " halvings of delta");
        delta *= 0.5;
    }
    res.delta = delta;
    res.halvings = halvings;

    SteadyProfile& s = res.profile;
    for (std::size_t k = nx.size() - 1; k >= 1; --k) {
        s.x.push_back(0.5 * (nx[k] + nx[k - 1]));
        s.dx.push_back(nx[k - 1] - nx[k]);
        s.U.push_back(0.5 * (nU[k] + nU[k - 1]));
    }
    if (p.eps > 0.0) {
        s.x.push_back(xg);
        s.dx.push_back(p.eps);
        s.U.push_back(Ugap);
    }
    for (std::size_t j = 0; j < p.n; ++j) {
        s.x.push_back(p.center(j));
        s.dx.push_back(p.h);
        s.U.push_back(pair.U[j]);
    }
    s.scale(1.0 / s.mass());
    return res;
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct EstimateCheck {
    std::string name;
    double value = 0.0;
    double bound = 0.0;  // NaN when only reported
    bool pass = true;
    std::string detail;
};

struct SteadyStateReport {
    SteadyPath path = SteadyPath::Direct;
    double Vbar = 0.0;
    double lambda = 0.0;
    double eigen_residual = 0.0;
    double M = 0.0;
    double mass_scale = 0.0;
    double x0 = 0.0;
    double x_min = 0.0;
    double R = 0.0;
    std::size_t n = 0;
    double eps = 0.0;
    double stationarity_residual = 0.0;       // discrete mass balance, relative
    double stationarity_residual_cell = 0.0;  // |Vbar - sum d U dx| / Vbar at cell centres
    SteadyProfile normalized;                 // integral 1
    SteadyProfile U;                          // scaled to total mass M
    VbarResult search;
    std::vector<EstimateCheck> checks;

    bool all_checks_pass() const {
        return std::all_of(checks.begin(), checks.end(), [](const EstimateCheck& c) { return c.pass; });
    }
};

/// c = (M - Vbar) / int x U for a normalized U.
inline double mass_scale(double Vbar, const SteadyProfile& normalized, double M) {
    if (!(M > Vbar))
        throw ValidationError("scale_to_mass: M = " + std::to_string(M) + " <= Vbar = " + std::to_string(Vbar) +
                              ", all mass stays monomeric");
    const double m1 = normalized.first_moment();
    if (!(m1 > 0.0)) throw ValidationError("scale_to_mass: profile has no polymer mass");
    return (M - Vbar) / m1;
}

/// Relative discrete mass balance sum_i x_i (A_transport U)_i h / (Vbar int U)
/// on a grid problem. Equals the continuum Vbar - int d U up to the O(h)
/// quadrature of the upwind face values.
inline double discrete_stationarity(const TruncatedEigenProblem& p, const std::vector<double>& U) {
    const auto F = transport_fluxes(p, U);
    double acc = 0.0, total = 0.0;
    for (std::size_t i = 0; i < p.n; ++i) {
        acc += p.center(i) * (F[i] - F[i + 1]);
        total += U[i] * p.h;
    }
    return std::abs(acc) / (p.V * total);
}

inline SteadyStateReport scale_to_mass(double Vbar, const SteadyProfile& normalized, double M,
                                       const RateModel& model) {
    SteadyStateReport rep;
    rep.Vbar = Vbar;
    rep.M = M;
    rep.normalized = normalized;
    rep.mass_scale = mass_scale(Vbar, normalized, M);
    rep.U = normalized;
    rep.U.scale(rep.mass_scale);
    const double dU = normalized.integral([&](double y) { return eval_d(model.d, y); });
    rep.stationarity_residual_cell = std::abs(Vbar - dU / normalized.mass()) / Vbar;
    return rep;
}

struct EstimateValues {
    std::vector<double> C_k;  // int B x^k U, k = 0..k_max
    double sup_flux = 0.0;    // sup |Vbar - d| U
    double holder = 0.0;      // sup over |x - x0| <= x_min of |Vbar - d| U / |x - x0|^gamma
    double boundary_gap = 0.0;  // |(d(0) - Vbar) U(0+) - int B U| / int B U
};

inline EstimateValues estimate_values(const SteadyProfile& U, double Vbar, double x0, double x_min, double gamma,
                                      const RateModel& model, int k_max) {
    EstimateValues ev;
    for (int k = 0; k <= k_max; ++k)
        ev.C_k.push_back(U.integral([&](double y) { return eval_B(model.frag, y) * std::pow(y, k); }));
    for (std::size_t i = 0; i < U.size(); ++i) {
        const double flux = std::abs(Vbar - eval_d(model.d, U.x[i])) * U.U[i];
        ev.sup_flux = std::max(ev.sup_flux, flux);
        const double gap = std::abs(U.x[i] - x0);
        if (gap > 0.0 && gap <= x_min) ev.holder = std::max(ev.holder, flux / std::pow(gap, gamma));
    }
    std::size_t first = 0;
    for (std::size_t i = 1; i < U.size(); ++i)
        if (U.x[i] < U.x[first]) first = i;
    const double lhs = (d_at_zero(model.d) - Vbar) * U.U[first];
    ev.boundary_gap = std::abs(lhs - ev.C_k[0]) / ev.C_k[0];
    return ev;
}

/// Estimate checks on a normalized profile, each compared with a second
/// profile at doubled resolution where a refinement ratio is required.
inline std::vector<EstimateCheck> verify_estimates(const SteadyStateReport& coarse, const SteadyStateReport& fine,
                                                   const RateModel& model, int k_max, double gamma = 1.0) {
    std::vector<EstimateCheck> out;
    const auto a = estimate_values(coarse.normalized, coarse.Vbar, coarse.x0, coarse.x_min, gamma, model, k_max);
    const auto b = estimate_values(fine.normalized, fine.Vbar, fine.x0, coarse.x_min, gamma, model, k_max);
    auto ratio = [](double x, double y) { return std::max(x, y) / std::min(x, y); };
    for (int k = 0; k <= k_max; ++k) {
        const double r = ratio(a.C_k[k], b.C_k[k]);
        out.push_back({"moment_bound_k" + std::to_string(k), a.C_k[k], 1.5, std::isfinite(a.C_k[k]) && r <= 1.5,
                       "int B x^k U = " + std::to_string(a.C_k[k]) + ", refinement ratio " + std::to_string(r)});
    }
    const double BM = B_sup(model.frag);
    out.push_back({"sup_flux_bound", a.sup_flux, 2.0 * BM * 1.05, a.sup_flux <= 2.0 * BM * 1.05,
                   "sup |Vbar - d| U vs 2 B_M (1 + 5%)"});
    {
        const double r = ratio(a.holder, b.holder);
        out.push_back({"holder_near_x0", a.holder, 1.5, std::isfinite(a.holder) && a.holder > 0.0 && r <= 1.5,
                       "C = " + std::to_string(a.holder) + " on |x - x0| <= " + std::to_string(coarse.x_min) +
                           ", refinement ratio " + std::to_string(r)});
    }
    const double lo = d_infimum(model.d), hi = d_at_zero(model.d);
    out.push_back({"eta_margin_lower", coarse.Vbar - lo, 0.0, coarse.Vbar - lo > 0.0, "Vbar - d(inf)"});
    out.push_back({"eta_margin_upper", hi - coarse.Vbar, 0.0, hi - coarse.Vbar > 0.0, "d(0) - Vbar"});
    out.push_back({"boundary_number_balance", a.boundary_gap, 0.05, a.boundary_gap <= 0.05,
                   "(d(0) - Vbar) U(0+) vs int B U"});
    return out;
}

/// Full pipeline at one resolution: V-bar search, profile on [0, R], mass scaling.
inline SteadyStateReport solve_steady(const RateModel& model, const SteadyOptions& opt, double M,
                                      const ExtensionOptions& ext = {}) {
    LambdaCurve curve(model, opt);
    auto search = find_Vbar(curve);
    const auto& ev = search.at_root;
    if (!ev.error.empty()) throw ConvergenceError("solve_steady: " + ev.error);

    SteadyProfile prof;
    double stat = 0.0;
    if (opt.path == SteadyPath::Direct) {
        prof = profile_from_grid(ev.problem, ev.pair.U);
        stat = discrete_stationarity(ev.problem, ev.pair.U);
    } else {
        prof = extend_to_zero(ev.pair, ev.problem, model, ext).profile;
        stat = std::numeric_limits<double>::quiet_NaN();
    }
    for (double v : prof.U)
        if (!(v >= 0.0) || !std::isfinite(v)) throw ConvergenceError("solve_steady: profile not nonnegative");

    auto rep = scale_to_mass(search.Vbar, prof, M, model);
    rep.path = opt.path;
    rep.lambda = ev.lambda;
    rep.eigen_residual = ev.pair.residual;
    rep.x0 = ev.problem.x0;
    rep.x_min = 0.5 * rep.x0;
    rep.R = opt.R;
    rep.n = opt.n;
    rep.eps = opt.path == SteadyPath::Faithful ? opt.offset() : 0.0;
    rep.stationarity_residual = stat;
    rep.search = std::move(search);
    return rep;
}

/// L1 distance between two normalized profiles, evaluated on the cells of `a`.
inline double profile_l1_distance(const SteadyProfile& a, const SteadyProfile& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a.U[i] - b.at(a.x[i])) * a.dx[i];
    return acc;
}

} // namespace polykin
