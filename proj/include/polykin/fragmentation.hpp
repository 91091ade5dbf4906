#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "polykin/error.hpp"
#include "polykin/rates.hpp"
#include "polykin/state.hpp"

namespace polykin {

/// Column coefficients of the binary-fragmentation gain on the uniform cells
/// [a + j h, a + (j+1) h), j = 0..n-1, with (G u)_i = sum_j G_ij u_j.
///
/// Raw entries are the midpoint rule 2 B(y_j) kappa(y_j, x_i) h for i <= j.
/// Each column is rescaled so that sum_i x_i G_ij equals the exact mass that
/// the continuum operator deposits inside [a, y_j], which is y_j B(y_j) when
/// a = 0. For the uniform kernel every row i <= j of column j holds the same
/// value, returned as coeff[j].
///
/// With match_number the diagonal entry is freed as well (G_jj = coeff[j] +
/// diag[j]) so that each column also reproduces the exact daughter count;
/// only column 0, which has a single row, then keeps mass alone.
struct GainColumns {
    std::vector<double> raw_scale;  // coeff[j] / raw entry (1 for empty columns)
    std::vector<double> coeff;      // off-diagonal value of G_ij, i < j (and i = j without diag)
    std::vector<double> diag;       // extra diagonal gain, zero unless number is matched
    std::vector<double> loss;       // B(y_j)
};

inline GainColumns gain_columns(double a, double h, std::size_t n, const FragProfile& frag,
                                bool match_number = false) {
    GainColumns g;
    g.raw_scale.assign(n, 1.0);
    g.coeff.assign(n, 0.0);
    g.diag.assign(n, 0.0);
    g.loss.assign(n, 0.0);

    // Prefix sum of x_i over rows gives the raw column mass in O(n).
    double x_prefix = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double y = a + (static_cast<double>(j) + 0.5) * h;
        const double below = x_prefix;  // sum of x_i for i < j
        x_prefix += y;
        const double B = eval_B(frag, y);
        g.loss[j] = B;
        if (B == 0.0) continue;
        const double kappa = kernel_density(frag, y, y);
        const double raw_entry = 2.0 * B * kappa * h;
        const double raw_mass = raw_entry * x_prefix;
        const double lo = std::min(a, y);
        const double target =
            2.0 * B * y * (kernel_partial_moment(frag, y, y, 1) - kernel_partial_moment(frag, y, lo, 1));
        if (!(raw_mass > 0.0)) {
            if (y > h && target > 0.0)
                throw Error("fragmentation assembly: column " + std::to_string(j) +
                            " has zero raw mass but positive loss (kernel/grid mismatch)");
            continue;
        }
        g.raw_scale[j] = target / raw_mass;
        g.coeff[j] = raw_entry * g.raw_scale[j];
        if (match_number && j > 0) {
            // Solve c * j + c_d = count, c * below + c_d * y = target for the
            // off-diagonal value c and the diagonal value c_d.
            const double count =
                2.0 * B * (kernel_partial_moment(frag, y, y, 0) - kernel_partial_moment(frag, y, lo, 0)) / h;
            const double jd = static_cast<double>(j);
            const double c = (count * y - target / h) / (jd * y - below);
            const double c_d = count - c * jd;
            if (c > 0.0 && c_d > 0.0) {
                g.coeff[j] = c * h;
                g.diag[j] = (c_d - c) * h;
                g.raw_scale[j] = g.coeff[j] / raw_entry;
            }
        }
    }
    return g;
}

/// Discrete operator u -> 2 int_x^inf B(y) kappa(y,x) u(y) dy - B(x) u(x).
struct FragOperator {
    SizeGrid grid;
    std::vector<double> loss;   // L_j = B(x_j)
    std::vector<double> coeff;  // fast path: G_ij = coeff[j] for i <= j
    std::vector<double> diag;   // plus diag[j] on the diagonal
    std::vector<double> dense;  // optional row-major n x n gain matrix

    bool has_dense() const { return !dense.empty(); }
    double gain(std::size_t i, std::size_t j) const { return dense[i * grid.size() + j]; }
};

inline FragOperator assemble(const SizeGrid& grid, const FragProfile& frag, bool with_dense = false) {
    const std::size_t n = grid.size();
    auto cols = gain_columns(0.0, grid.dx(), n, frag, true);
    FragOperator op;
    op.grid = grid;
    op.loss = std::move(cols.loss);
    op.coeff = std::move(cols.coeff);
    op.diag = std::move(cols.diag);
    if (with_dense) {
        op.dense.assign(n * n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const double y = grid.center(j);
            const double B = op.loss[j];
            if (B == 0.0) continue;
            for (std::size_t i = 0; i <= j; ++i)
                op.dense[i * n + j] = 2.0 * B * kernel_density(frag, y, grid.center(i)) * grid.dx() * cols.raw_scale[j];
            op.dense[j * n + j] += op.diag[j];
        }
    }
    return op;
}

/// (G u)_i - L_i u_i via suffix sums, O(n).
inline void apply_into(const FragOperator& op, std::span<const double> u, std::span<double> out) {
    const std::size_t n = op.grid.size();
    if (u.size() != n || out.size() != n) throw std::invalid_argument("fragmentation apply: dimension mismatch");
    double suffix = 0.0;
    for (std::size_t k = n; k-- > 0;) {
        suffix += op.coeff[k] * u[k];
        out[k] = suffix + (op.diag[k] - op.loss[k]) * u[k];
    }
}

inline std::vector<double> apply(const FragOperator& op, std::span<const double> u) {
    std::vector<double> out(op.grid.size());
    apply_into(op, u, out);
    return out;
}

/// Dense O(n^2) evaluation, used as the reference for the fast path.
inline std::vector<double> apply_dense(const FragOperator& op, std::span<const double> u) {
    const std::size_t n = op.grid.size();
    if (!op.has_dense()) throw std::logic_error("apply_dense: operator assembled without dense storage");
    if (u.size() != n) throw std::invalid_argument("fragmentation apply: dimension mismatch");
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = i; j < n; ++j) acc += op.dense[i * n + j] * u[j];
        out[i] = acc - op.loss[i] * u[i];
    }
    return out;
}

} // namespace polykin
