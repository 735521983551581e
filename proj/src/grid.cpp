#include "ivim/grid.hpp"

#include "ivim/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ivim {

namespace {

void require_in_interval(const Grid& grid, double t)
{
    if (!(t >= grid.a() && t <= grid.T())) {
        throw Error(ErrorKind::OutOfRange, "t = " + std::to_string(t) + " lies outside [" +
                                               std::to_string(grid.a()) + ", " +
                                               std::to_string(grid.T()) + "]");
    }
}

}  // namespace

Grid::Grid(double a, double T, std::size_t n)
    : a_(a), T_(T), n_(n), h_((T - a) / static_cast<double>(n - 1))
{
}

Grid make_grid(double a, double T, std::size_t n)
{
    if (!std::isfinite(a) || !std::isfinite(T) || !(T > a)) {
        throw Error(ErrorKind::InvalidInterval, "interval requires finite a < T");
    }
    if (n < 2) {
        throw Error(ErrorKind::TooFewNodes, "a grid needs at least 2 nodes");
    }
    Grid grid(a, T, n);
    if (!(grid.step() > 0.0) || !(grid.node(n - 1) < T)) {
        throw Error(ErrorKind::InvalidInterval, "interval too small for the requested node count");
    }
    return grid;
}

double Grid::node(std::size_t i) const
{
    if (i < 1 || i > n_) {
        throw Error(ErrorKind::IndexOutOfRange,
                    "node index " + std::to_string(i) + " outside 1.." + std::to_string(n_));
    }
    if (i == n_) {
        return T_;
    }
    return a_ + static_cast<double>(i - 1) * h_;
}

std::vector<double> Grid::nodes() const
{
    std::vector<double> out(n_);
    for (std::size_t i = 1; i <= n_; ++i) {
        out[i - 1] = node(i);
    }
    return out;
}

PiecewiseLinear::PiecewiseLinear(const Grid& grid) : grid_(grid), values_(grid.size(), 0.0) {}

PiecewiseLinear::PiecewiseLinear(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values))
{
    if (values_.size() != grid_.size()) {
        throw Error(ErrorKind::ShapeMismatch, "expected " + std::to_string(grid_.size()) +
                                                  " nodal values, got " +
                                                  std::to_string(values_.size()));
    }
    if (values_.front() != 0.0) {
        throw Error(ErrorKind::OutOfRange, "elements of X_h must vanish at the first node", 1);
    }
}

double PiecewiseLinear::value(std::size_t i) const
{
    if (i < 1 || i > values_.size()) {
        throw Error(ErrorKind::IndexOutOfRange, "nodal index " + std::to_string(i) + " out of range");
    }
    return values_[i - 1];
}

double hat_eval(const Grid& grid, std::size_t i, double t)
{
    const std::size_t n = grid.size();
    if (i < 2 || i > n) {
        throw Error(ErrorKind::IndexOutOfRange,
                    "hat index " + std::to_string(i) + " outside 2.." + std::to_string(n));
    }
    require_in_interval(grid, t);

    const double h = grid.step();
    const double left = grid.node(i - 1);
    const double centre = grid.node(i);
    if (t == centre) {
        return 1.0;
    }
    if (t >= left && t < centre) {
        return (t - left) / h;
    }
    if (i < n) {
        const double right = grid.node(i + 1);
        if (t > centre && t <= right) {
            return (right - t) / h;
        }
    }
    return 0.0;
}

double mu_weight(std::size_t r, std::size_t i, double h)
{
    if (r < 2 || i < 2) {
        throw Error(ErrorKind::IndexOutOfRange, "weight indices start at 2");
    }
    if (i < r) {
        return 0.0;
    }
    if (i == r) {
        return 0.5 * h;
    }
    return h;
}

double interp_eval(const PiecewiseLinear& pl, double t)
{
    const Grid& grid = pl.grid();
    require_in_interval(grid, t);

    const std::size_t n = grid.size();
    if (t == grid.T()) {
        return pl.value(n);
    }
    // 1-based left node of the bracketing cell, corrected for rounding in the division.
    auto j = static_cast<std::size_t>((t - grid.a()) / grid.step()) + 1;
    j = std::min(j, n - 1);
    while (j > 1 && t < grid.node(j)) {
        --j;
    }
    while (j < n - 1 && t >= grid.node(j + 1)) {
        ++j;
    }

    const double left = grid.node(j);
    const double v0 = pl.value(j);
    if (t == left) {
        return v0;
    }
    const double v1 = pl.value(j + 1);
    return v0 + (v1 - v0) * ((t - left) / grid.step());
}

PiecewiseLinear project_samples(const Grid& grid, const std::function<double(double)>& sampler)
{
    std::vector<double> values(grid.size(), 0.0);
    for (std::size_t i = 2; i <= grid.size(); ++i) {
        const double v = sampler(grid.node(i));
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::NonFiniteSample,
                        "sampler returned a non-finite value at node " + std::to_string(i), i);
        }
        values[i - 1] = v;
    }
    return PiecewiseLinear(grid, std::move(values));
}

}  // namespace ivim
