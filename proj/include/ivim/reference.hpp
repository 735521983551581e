#pragma once

#include "ivim/engine.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ivim {

struct ReferenceSource {
    enum class Kind { Rk4, ClosedForm };
    Kind kind = Kind::ClosedForm;
    double step = 0.0;  // RK4 only
    std::string name;   // closed form only
};

/// Trajectory used as ground truth for error measurements.
struct ReferenceSolution {
    std::vector<double> nodes;
    std::vector<std::vector<double>> values;  // one k-vector per node
    ReferenceSource source;

    /// Piecewise-linear interpolation of the trajectory at t.
    std::vector<double> at(double t) const;
};

/// Classical fixed-step RK4 from the original (unshifted) initial values.
/// (T - a)/step must be an integer to within 1e-9.
ReferenceSolution rk4_reference(const IvpSystem& sys, double step);

/// Samples sys.exact on the given nodes.
ReferenceSolution closed_form_reference(const IvpSystem& sys, std::span<const double> nodes,
                                        std::string name);

struct BuiltinInterval {
    double a;
    double T;
};

/// Interval of the built-in examples ex1, ex2, ex3.
BuiltinInterval builtin_interval(std::string_view name);

/// Closed-form solutions of the built-in examples:
///   ex1: 1 + sqrt(2) tanh(sqrt(2) t + log((sqrt(2)-1)/(sqrt(2)+1))/2) on [0, 1]
///   ex2: sin(t)^(5/3) on [0, 3]
///   ex3: (t - sin t, 1 - cos t) on [0, 1.5]
std::vector<double> exact_builtin_eval(std::string_view name, double t);

struct ErrorMetrics {
    double max_abs = 0.0;
    /// Max over components at each node.
    std::vector<double> per_node_abs;
    /// log10 of per_node_abs; exact zeros map to -infinity.
    std::vector<double> per_node_log10;
};

/// Errors of a trajectory against a reference that is at least as dense.
ErrorMetrics error_metrics(std::span<const double> nodes, const std::vector<std::vector<double>>& values,
                           const ReferenceSolution& ref);

/// Errors of the solver's final iterate (unshifted) against `ref`.
ErrorMetrics error_metrics(const SolveReport& sol, const ReferenceSolution& ref);

/// log2(err_coarse / err_fine) for a grid with twice the cells.
double empirical_order(double err_coarse, double err_fine);

}  // namespace ivim
