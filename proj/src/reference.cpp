#include "ivim/reference.hpp"

#include "ivim/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace ivim {

namespace {

void require_finite(std::span<const double> y, double t)
{
    for (double v : y) {
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::Divergence, "RK4 state became non-finite at t = " + std::to_string(t));
        }
    }
}

}  // namespace

std::vector<double> ReferenceSolution::at(double t) const
{
    if (nodes.empty() || t < nodes.front() || t > nodes.back()) {
        throw Error(ErrorKind::OutOfRange, "t = " + std::to_string(t) + " outside the reference trajectory");
    }
    const auto hi = std::lower_bound(nodes.begin(), nodes.end(), t);
    const auto j = static_cast<std::size_t>(hi - nodes.begin());
    if (*hi == t) {
        return values[j];
    }
    const double w = (t - nodes[j - 1]) / (nodes[j] - nodes[j - 1]);
    std::vector<double> out(values[j].size());
    for (std::size_t c = 0; c < out.size(); ++c) {
        out[c] = values[j - 1][c] + w * (values[j][c] - values[j - 1][c]);
    }
    return out;
}

ReferenceSolution rk4_reference(const IvpSystem& sys, double step)
{
    validate(sys);
    if (!(step > 0.0) || !std::isfinite(step)) {
        throw Error(ErrorKind::ConfigInvalid, "RK4 step must be positive");
    }
    const double cells = (sys.T - sys.a) / step;
    const double rounded = std::round(cells);
    if (rounded < 1.0 || std::abs(cells - rounded) > 1e-9) {
        throw Error(ErrorKind::ConfigInvalid,
                    "RK4 step " + std::to_string(step) + " does not divide the interval");
    }
    const auto count = static_cast<std::size_t>(rounded);
    const std::size_t k = sys.size();

    ReferenceSolution ref;
    ref.source = {ReferenceSource::Kind::Rk4, step, {}};
    ref.nodes.reserve(count + 1);
    ref.values.reserve(count + 1);

    std::vector<double> y = sys.initial;
    std::vector<double> k1(k), k2(k), k3(k), k4(k), tmp(k);
    const auto eval = [&](double t, const std::vector<double>& state, std::vector<double>& out) {
        for (std::size_t c = 0; c < k; ++c) {
            try {
                out[c] = sys.rhs[c](t, state);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::NonFinite && e.kind() != ErrorKind::Overflow) {
                    throw;
                }
                throw Error(ErrorKind::Divergence,
                            "RK4 right-hand side failed at t = " + std::to_string(t) + ": " + e.what());
            }
        }
    };

    ref.nodes.push_back(sys.a);
    ref.values.push_back(y);
    for (std::size_t j = 0; j < count; ++j) {
        const double t = sys.a + static_cast<double>(j) * step;
        eval(t, y, k1);
        for (std::size_t c = 0; c < k; ++c) tmp[c] = y[c] + 0.5 * step * k1[c];
        eval(t + 0.5 * step, tmp, k2);
        for (std::size_t c = 0; c < k; ++c) tmp[c] = y[c] + 0.5 * step * k2[c];
        eval(t + 0.5 * step, tmp, k3);
        for (std::size_t c = 0; c < k; ++c) tmp[c] = y[c] + step * k3[c];
        eval(t + step, tmp, k4);
        for (std::size_t c = 0; c < k; ++c) {
            y[c] += step / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        const double t_next = j + 1 == count ? sys.T : sys.a + static_cast<double>(j + 1) * step;
        require_finite(y, t_next);
        ref.nodes.push_back(t_next);
        ref.values.push_back(y);
    }
    return ref;
}

ReferenceSolution closed_form_reference(const IvpSystem& sys, std::span<const double> nodes,
                                        std::string name)
{
    if (!sys.has_exact()) {
        throw Error(ErrorKind::ConfigInvalid, "system has no closed-form solution");
    }
    ReferenceSolution ref;
    ref.source = {ReferenceSource::Kind::ClosedForm, 0.0, std::move(name)};
    ref.nodes.assign(nodes.begin(), nodes.end());
    for (double t : nodes) {
        ref.values.push_back(sys.exact(t));
    }
    return ref;
}

BuiltinInterval builtin_interval(std::string_view name)
{
    if (name == "ex1") return {0.0, 1.0};
    if (name == "ex2") return {0.0, 3.0};
    if (name == "ex3") return {0.0, 1.5};
    throw Error(ErrorKind::UnknownProblem, "unknown built-in problem '" + std::string(name) + "'");
}

std::vector<double> exact_builtin_eval(std::string_view name, double t)
{
    const auto [a, T] = builtin_interval(name);
    if (!(t >= a && t <= T)) {
        throw Error(ErrorKind::OutOfRange, "t = " + std::to_string(t) + " outside the interval of " +
                                               std::string(name));
    }
    if (name == "ex1") {
        const double r = std::numbers::sqrt2;
        return {1.0 + r * std::tanh(r * t + 0.5 * std::log((r - 1.0) / (r + 1.0)))};
    }
    if (name == "ex2") {
        // sin t >= 0 on [0, 3], so the real power is well defined.
        return {std::pow(std::sin(t), 5.0 / 3.0)};
    }
    return {t - std::sin(t), 1.0 - std::cos(t)};
}

ErrorMetrics error_metrics(std::span<const double> nodes, const std::vector<std::vector<double>>& values,
                           const ReferenceSolution& ref)
{
    if (values.size() != nodes.size()) {
        throw Error(ErrorKind::ShapeMismatch, "trajectory has mismatched node and value counts");
    }
    if (nodes.empty()) {
        return {};
    }
    if (ref.nodes.size() < nodes.size() || ref.nodes.front() > nodes.front() ||
        ref.nodes.back() < nodes.back()) {
        throw Error(ErrorKind::GridMismatch, "reference trajectory is sparser than the solution grid");
    }
    ErrorMetrics out;
    out.per_node_abs.resize(nodes.size());
    out.per_node_log10.resize(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto expected = ref.at(nodes[i]);
        if (expected.size() != values[i].size()) {
            throw Error(ErrorKind::ShapeMismatch, "reference and solution have different component counts");
        }
        double e = 0.0;
        for (std::size_t c = 0; c < expected.size(); ++c) {
            e = std::max(e, std::abs(values[i][c] - expected[c]));
        }
        out.per_node_abs[i] = e;
        out.per_node_log10[i] = e == 0.0 ? -std::numeric_limits<double>::infinity() : std::log10(e);
        out.max_abs = std::max(out.max_abs, e);
    }
    return out;
}

ErrorMetrics error_metrics(const SolveReport& sol, const ReferenceSolution& ref)
{
    const std::vector<double> nodes = sol.grid.nodes();
    const std::size_t k = sol.final.size();
    std::vector<std::vector<double>> components(k);
    for (std::size_t c = 0; c < k; ++c) {
        components[c] = sol.nodal(c);
    }
    std::vector<std::vector<double>> values(nodes.size(), std::vector<double>(k));
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (std::size_t c = 0; c < k; ++c) {
            values[i][c] = components[c][i];
        }
    }
    return error_metrics(nodes, values, ref);
}

double empirical_order(double err_coarse, double err_fine)
{
    if (!(err_coarse > 0.0) || !(err_fine > 0.0) || !std::isfinite(err_coarse) ||
        !std::isfinite(err_fine)) {
        throw Error(ErrorKind::ConfigInvalid, "empirical order needs positive finite errors");
    }
    return std::log2(err_coarse / err_fine);
}

}  // namespace ivim
