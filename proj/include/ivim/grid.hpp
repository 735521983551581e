#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace ivim {

/**
 * Uniform partition of [a, T] into n - 1 cells of width h.
 *
 * Node indices are 1-based: node(1) == a and node(n) == T exactly.
 * Interior nodes are a + (i - 1) h.
 */
class Grid {
public:
    double a() const noexcept { return a_; }
    double T() const noexcept { return T_; }
    std::size_t size() const noexcept { return n_; }
    double step() const noexcept { return h_; }

    double node(std::size_t i) const;
    std::vector<double> nodes() const;

    bool operator==(const Grid& other) const noexcept
    {
        return a_ == other.a_ && T_ == other.T_ && n_ == other.n_;
    }

private:
    friend Grid make_grid(double a, double T, std::size_t n);
    Grid(double a, double T, std::size_t n);

    double a_;
    double T_;
    std::size_t n_;
    double h_;
};

Grid make_grid(double a, double T, std::size_t n);

/**
 * Element of X_h = span{phi_2, ..., phi_n}: a piecewise-linear function that
 * vanishes at a. Nodal values are addressed 1-based; value(1) is always 0.
 */
class PiecewiseLinear {
public:
    /// Zero element.
    explicit PiecewiseLinear(const Grid& grid);

    /// `values` holds all n nodal values; values[0] must be 0.
    PiecewiseLinear(const Grid& grid, std::vector<double> values);

    const Grid& grid() const noexcept { return grid_; }
    double value(std::size_t i) const;
    std::span<const double> values() const noexcept { return values_; }

    bool operator==(const PiecewiseLinear&) const = default;

private:
    Grid grid_;
    std::vector<double> values_;
};

/// First-order B-spline phi_i for i in 2..n, evaluated at t in [a, T].
double hat_eval(const Grid& grid, std::size_t i, double t);

/// Integral of phi_r over [a, t_i]: 0 if i < r, h/2 if i == r, h if i > r.
double mu_weight(std::size_t r, std::size_t i, double h);

/// Linear interpolation of the nodal values. The bracketing cell is
/// [t_j, t_{j+1}) except the last one, which is closed.
double interp_eval(const PiecewiseLinear& pl, double t);

/// Interpolant of `sampler` in X_h. The value at node 1 is pinned to 0
/// regardless of sampler(a).
PiecewiseLinear project_samples(const Grid& grid, const std::function<double(double)>& sampler);

}  // namespace ivim
