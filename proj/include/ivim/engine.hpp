#pragma once

#include "ivim/grid.hpp"
#include "ivim/multiplier.hpp"

#include <chrono>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace ivim {

/// Right-hand side f_k(t, state) of one equation u_k' = f_k.
using RhsFn = std::function<double(double t, std::span<const double> state)>;
/// Closed-form solution, one value per equation.
using ExactFn = std::function<std::vector<double>(double t)>;

/**
 * First-order system u_k' = f_k(t, u) on [a, T] with u(a) = initial.
 *
 * alpha[k] fixes the linear part L_k u = u_k' + alpha[k] u_k and with it the
 * multiplier -exp(alpha (s - t)). rhs[k] is the complete right-hand side.
 */
struct IvpSystem {
    double a = 0.0;
    double T = 1.0;
    std::vector<double> alpha;
    std::vector<RhsFn> rhs;
    std::vector<double> initial{};
    ExactFn exact;  // may be empty

    std::size_t size() const noexcept { return rhs.size(); }
    bool has_exact() const noexcept { return static_cast<bool>(exact); }
};

/// Checks shapes and the interval; throws ConfigInvalid / InvalidInterval.
void validate(const IvpSystem& sys);

enum class QuadratureMode {
    /// Nodal update exactly as derived from X_h: no s = a endpoint term.
    Paper,
    /// Adds -(h/2) H(t_1, t_i), the standard composite trapezoid endpoint.
    FullTrapezoid,
};

std::string_view to_string(QuadratureMode mode);
/// Accepts "paper" and "full_trapezoid"; throws ConfigInvalid otherwise.
QuadratureMode parse_mode(std::string_view text);

enum class Summation {
    /// Prefix-sum path for exponential multipliers with |alpha| (T - a) <= 30.
    Automatic,
    /// Always the O(n^2) left-to-right sum.
    Direct,
};

struct StepOptions {
    QuadratureMode mode = QuadratureMode::Paper;
    Summation summation = Summation::Automatic;
    unsigned threads = 1;
};

/// Largest |alpha| (T - a) for which the prefix-sum path is used.
inline constexpr double kPrefixExponentLimit = 30.0;

struct SolveConfig {
    std::size_t n = 41;
    std::size_t m_max = 10;
    QuadratureMode mode = QuadratureMode::Paper;
    /// Early exit once the successive-difference max-norm drops to this; 0 disables.
    double stop_tol = 0.0;
    double divergence_cap = 1e12;
    bool keep_history = false;
    Summation summation = Summation::Automatic;
    unsigned threads = 1;
};

using State = std::vector<PiecewiseLinear>;

struct SolveReport {
    Grid grid;
    QuadratureMode mode = QuadratureMode::Paper;
    /// Final iterate of the shifted problem (each component vanishes at a).
    State final{};
    /// Shift u_a added back when evaluating the solution.
    std::vector<double> initial{};
    /// Iterates 1..iterations_run when history was requested.
    std::vector<State> history{};
    /// diffs[m-1] = max-norm of u_m - u_{m-1}.
    std::vector<double> diffs{};
    /// Per-node absolute error (max over components) when an exact solution exists.
    std::optional<std::vector<double>> errors{};
    std::size_t iterations_run = 0;
    std::chrono::duration<double> wall_time{};

    /// Unshifted nodal values of component k (0-based), nodes 1..n.
    std::vector<double> nodal(std::size_t k) const;
};

/// Change of variable w = u - u_a; the original system is not modified.
IvpSystem shift_to_zero(const IvpSystem& sys);

/// One interpolated VIM update of every component of a normalized system.
State ivim_step(const State& state, const IvpSystem& sys, const Grid& grid,
                std::span<const Multiplier> mults, const StepOptions& options = {});

double successive_diff_norm(const State& s1, const State& s2);

/// Runs the iteration from u0 (zero when absent).
SolveReport solve(const IvpSystem& sys, const SolveConfig& cfg,
                  const std::optional<State>& u0 = std::nullopt);

std::vector<double> eval_solution(const SolveReport& report, double t);

}  // namespace ivim
