#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace polykin {

/// Uniform cell-centred discretization of [0, x_max].
class SizeGrid {
public:
    SizeGrid() = default;

    SizeGrid(double x_max, std::size_t n_cells) : x_max_(x_max), n_(n_cells) {
        if (!(x_max > 0.0)) throw std::invalid_argument("SizeGrid: x_max must be > 0");
        if (n_cells < 2) throw std::invalid_argument("SizeGrid: need at least 2 cells");
        dx_ = x_max / static_cast<double>(n_cells);
    }

    double x_max() const noexcept { return x_max_; }
    std::size_t size() const noexcept { return n_; }
    double dx() const noexcept { return dx_; }

    /// Cell centre x_i = (i + 1/2) dx.
    double center(std::size_t i) const noexcept { return (static_cast<double>(i) + 0.5) * dx_; }
    /// Face x_{i-1/2} = i dx, for i = 0..n.
    double face(std::size_t i) const noexcept { return static_cast<double>(i) * dx_; }

    std::vector<double> centers() const {
        std::vector<double> xs(n_);
        for (std::size_t i = 0; i < n_; ++i) xs[i] = center(i);
        return xs;
    }

    friend bool operator==(const SizeGrid& a, const SizeGrid& b) {
        return a.x_max_ == b.x_max_ && a.n_ == b.n_;
    }

private:
    double x_max_ = 1.0;
    std::size_t n_ = 2;
    double dx_ = 0.5;
};

/// Monomer level V and polymer density u at time t.
struct SystemState {
    double t = 0.0;
    double V = 0.0;
    std::vector<double> u;
    SizeGrid grid;

    SystemState() = default;
    SystemState(SizeGrid g, double V0, double t0 = 0.0) : t(t0), V(V0), u(g.size(), 0.0), grid(g) {}
};

/// M_n = (1/n) sum x_i^n u_i dx.
inline double moment(const SystemState& s, double n) {
    if (!(n > 0.0)) throw std::invalid_argument("moment: order must be > 0");
    double acc = 0.0;
    for (std::size_t i = 0; i < s.u.size(); ++i) acc += std::pow(s.grid.center(i), n) * s.u[i];
    return acc * s.grid.dx() / n;
}

/// rho = sum u_i dx.
inline double number(const SystemState& s) {
    double acc = 0.0;
    for (double v : s.u) acc += v;
    return acc * s.grid.dx();
}

/// sum x_i u_i dx.
inline double polymer_mass(const SystemState& s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s.u.size(); ++i) acc += s.grid.center(i) * s.u[i];
    return acc * s.grid.dx();
}

/// V + sum x_i u_i dx.
inline double total_mass(const SystemState& s) { return s.V + polymer_mass(s); }

} // namespace polykin
