#include "ivim/engine.hpp"

#include "ivim/error.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>
#include <thread>

namespace ivim {

namespace {

// Runs body(begin, end) over [first, last) split into contiguous chunks. Each
// index is processed by exactly one worker, so results do not depend on the
// worker count. The exception from the lowest failing chunk is rethrown.
template <class Body>
void for_each_chunk(std::size_t first, std::size_t last, unsigned threads, Body body)
{
    const std::size_t count = last > first ? last - first : 0;
    const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
    if (workers <= 1) {
        body(first, last);
        return;
    }
    std::vector<std::exception_ptr> failures(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (count + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = first + w * chunk;
        const std::size_t end = std::min(last, begin + chunk);
        pool.emplace_back([&, w, begin, end] {
            try {
                if (begin < end) {
                    body(begin, end);
                }
            } catch (...) {
                failures[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    for (const auto& f : failures) {
        if (f) {
            std::rethrow_exception(f);
        }
    }
}

[[noreturn]] void diverged(const std::string& what, std::size_t node)
{
    throw Error(ErrorKind::Divergence, what + " at node " + std::to_string(node), node);
}

}  // namespace

void validate(const IvpSystem& sys)
{
    if (!std::isfinite(sys.a) || !std::isfinite(sys.T) || !(sys.T > sys.a)) {
        throw Error(ErrorKind::InvalidInterval, "system interval requires finite a < T");
    }
    const std::size_t k = sys.size();
    if (k == 0) {
        throw Error(ErrorKind::ConfigInvalid, "system has no equations");
    }
    if (sys.alpha.size() != k || sys.initial.size() != k) {
        throw Error(ErrorKind::ConfigInvalid, "alpha, rhs and initial must have one entry per equation");
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (!sys.rhs[c]) {
            throw Error(ErrorKind::ConfigInvalid, "equation " + std::to_string(c + 1) + " has no rhs");
        }
        if (!std::isfinite(sys.alpha[c]) || !std::isfinite(sys.initial[c])) {
            throw Error(ErrorKind::ConfigInvalid,
                        "equation " + std::to_string(c + 1) + " has a non-finite alpha or initial value");
        }
    }
}

std::string_view to_string(QuadratureMode mode)
{
    return mode == QuadratureMode::Paper ? "paper" : "full_trapezoid";
}

QuadratureMode parse_mode(std::string_view text)
{
    if (text == "paper") {
        return QuadratureMode::Paper;
    }
    if (text == "full_trapezoid") {
        return QuadratureMode::FullTrapezoid;
    }
    throw Error(ErrorKind::ConfigInvalid, "unknown quadrature mode '" + std::string(text) + "'");
}

std::vector<double> SolveReport::nodal(std::size_t k) const
{
    const auto values = final.at(k).values();
    std::vector<double> out(values.begin(), values.end());
    for (double& v : out) {
        v += initial.at(k);
    }
    return out;
}

IvpSystem shift_to_zero(const IvpSystem& sys)
{
    validate(sys);
    const bool already_zero =
        std::all_of(sys.initial.begin(), sys.initial.end(), [](double v) { return v == 0.0; });
    if (already_zero) {
        return sys;
    }

    IvpSystem shifted = sys;
    const std::vector<double> ua = sys.initial;
    for (std::size_t c = 0; c < sys.size(); ++c) {
        shifted.rhs[c] = [f = sys.rhs[c], ua](double t, std::span<const double> w) {
            std::vector<double> u(w.begin(), w.end());
            for (std::size_t j = 0; j < u.size(); ++j) {
                u[j] += ua[j];
            }
            return f(t, u);
        };
    }
    std::fill(shifted.initial.begin(), shifted.initial.end(), 0.0);
    if (sys.exact) {
        shifted.exact = [g = sys.exact, ua](double t) {
            auto v = g(t);
            for (std::size_t j = 0; j < v.size() && j < ua.size(); ++j) {
                v[j] -= ua[j];
            }
            return v;
        };
    }
    return shifted;
}

State ivim_step(const State& state, const IvpSystem& sys, const Grid& grid,
                std::span<const Multiplier> mults, const StepOptions& options)
{
    const std::size_t k = sys.size();
    const std::size_t n = grid.size();
    if (state.size() != k || mults.size() != k) {
        throw Error(ErrorKind::ShapeMismatch, "state, multipliers and equations disagree in count");
    }
    for (const auto& component : state) {
        if (!(component.grid() == grid)) {
            throw Error(ErrorKind::GridMismatch, "state component lives on a different grid");
        }
    }
    if (grid.a() != sys.a || grid.T() != sys.T) {
        throw Error(ErrorKind::GridMismatch, "grid does not span the system interval");
    }

    const bool full = options.mode == QuadratureMode::FullTrapezoid;
    const double a = grid.a();
    const double h = grid.step();
    const std::vector<double> t = grid.nodes();

    // rhs[r * k + c] = f_c(t_r, u(t_r)), 0-based r. Node 0 is only needed for the
    // s = a endpoint of the full trapezoid.
    std::vector<double> rhs(n * k, 0.0);
    for_each_chunk(full ? 0 : 1, n, options.threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> w(k);
        for (std::size_t r = begin; r < end; ++r) {
            for (std::size_t c = 0; c < k; ++c) {
                w[c] = state[c].values()[r];
            }
            for (std::size_t c = 0; c < k; ++c) {
                double f = 0.0;
                try {
                    f = sys.rhs[c](t[r], w);
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::NonFinite && e.kind() != ErrorKind::Overflow) {
                        throw;
                    }
                    diverged(std::string(e.what()) + " in equation " + std::to_string(c + 1), r + 1);
                }
                if (!std::isfinite(f)) {
                    diverged("non-finite right-hand side in equation " + std::to_string(c + 1), r + 1);
                }
                rhs[r * k + c] = f;
            }
        }
    });

    State next;
    next.reserve(k);
    for (std::size_t c = 0; c < k; ++c) {
        const Multiplier& mult = mults[c];
        const auto u = state[c].values();
        const double u_a = u[0];
        auto f_at = [&](std::size_t r) { return rhs[r * k + c]; };
        std::vector<double> out(n, 0.0);

        const bool prefix = options.summation == Summation::Automatic && mult.is_exponential() &&
                            std::abs(mult.alpha()) * (grid.T() - a) <= kPrefixExponentLimit;
        if (prefix) {
            // H(t_r, t_i) = exp(alpha (t_r - t_i)) c_r with c_r = -(alpha u_r + f_r), so the
            // interior sum is exp(-alpha (t_i - a)) * sum_r exp(alpha (t_r - a)) c_r.
            const double alpha = mult.alpha();
            double running = 0.0;
            for (std::size_t i = 1; i < n; ++i) {
                const double c_i = -(alpha * u[i] + f_at(i));
                const double interior = std::exp(-alpha * (t[i] - a)) * running;
                double v = g_term(mult, u[i], u_a, t[i], a) - h * interior - 0.5 * h * c_i;
                if (full) {
                    v -= 0.5 * h * h_integrand(mult, f_at(0), u_a, a, t[i]);
                }
                if (!std::isfinite(v)) {
                    diverged("non-finite iterate value in equation " + std::to_string(c + 1), i + 1);
                }
                out[i] = v;
                running += std::exp(alpha * (t[i] - a)) * c_i;
            }
        } else {
            for_each_chunk(1, n, options.threads, [&](std::size_t begin, std::size_t end) {
                for (std::size_t i = begin; i < end; ++i) {
                    double acc = 0.0;
                    for (std::size_t r = 1; r < i; ++r) {
                        acc += h_integrand(mult, f_at(r), u[r], t[r], t[i]);
                    }
                    const double endpoint = h_integrand(mult, f_at(i), u[i], t[i], t[i]);
                    double v = g_term(mult, u[i], u_a, t[i], a) - h * acc - 0.5 * h * endpoint;
                    if (full) {
                        v -= 0.5 * h * h_integrand(mult, f_at(0), u_a, a, t[i]);
                    }
                    if (!std::isfinite(v)) {
                        diverged("non-finite iterate value in equation " + std::to_string(c + 1), i + 1);
                    }
                    out[i] = v;
                }
            });
        }
        next.emplace_back(grid, std::move(out));
    }
    return next;
}

double successive_diff_norm(const State& s1, const State& s2)
{
    if (s1.size() != s2.size()) {
        throw Error(ErrorKind::ShapeMismatch, "states have different component counts");
    }
    double norm = 0.0;
    for (std::size_t c = 0; c < s1.size(); ++c) {
        if (!(s1[c].grid() == s2[c].grid())) {
            throw Error(ErrorKind::ShapeMismatch, "states live on different grids");
        }
        const auto x = s1[c].values();
        const auto y = s2[c].values();
        for (std::size_t i = 0; i < x.size(); ++i) {
            norm = std::max(norm, std::abs(x[i] - y[i]));
        }
    }
    return norm;
}

SolveReport solve(const IvpSystem& sys, const SolveConfig& cfg, const std::optional<State>& u0)
{
    const auto started = std::chrono::steady_clock::now();
    validate(sys);
    if (cfg.n < 2) {
        throw Error(ErrorKind::ConfigInvalid, "n must be at least 2");
    }
    if (cfg.m_max < 1) {
        throw Error(ErrorKind::ConfigInvalid, "m must be at least 1");
    }
    if (!std::isfinite(cfg.stop_tol) || cfg.stop_tol < 0.0) {
        throw Error(ErrorKind::ConfigInvalid, "stop tolerance must be a nonnegative number");
    }
    if (!(cfg.divergence_cap > 0.0)) {
        throw Error(ErrorKind::ConfigInvalid, "divergence cap must be positive");
    }

    const Grid grid = make_grid(sys.a, sys.T, cfg.n);
    const IvpSystem normalized = shift_to_zero(sys);
    const std::size_t k = sys.size();

    std::vector<Multiplier> mults;
    mults.reserve(k);
    for (double alpha : sys.alpha) {
        mults.push_back(exp_multiplier(alpha));
    }

    State state;
    if (u0) {
        if (u0->size() != k) {
            throw Error(ErrorKind::ConfigInvalid, "initial iterate has the wrong component count");
        }
        for (const auto& component : *u0) {
            if (!(component.grid() == grid)) {
                throw Error(ErrorKind::ConfigInvalid, "initial iterate lives on a different grid");
            }
        }
        state = *u0;
    } else {
        state.assign(k, PiecewiseLinear(grid));
    }

    SolveReport report{.grid = grid, .mode = cfg.mode};
    report.initial = sys.initial;
    const StepOptions options{cfg.mode, cfg.summation, std::max(1u, cfg.threads)};

    for (std::size_t m = 1; m <= cfg.m_max; ++m) {
        State next = ivim_step(state, normalized, grid, mults, options);
        for (const auto& component : next) {
            const auto values = component.values();
            for (std::size_t i = 0; i < values.size(); ++i) {
                if (!(std::abs(values[i]) <= cfg.divergence_cap)) {
                    throw Error(ErrorKind::Divergence,
                                "iterate " + std::to_string(m) + " exceeds the divergence cap at node " +
                                    std::to_string(i + 1),
                                i + 1);
                }
            }
        }
        const double diff = successive_diff_norm(next, state);
        state = std::move(next);
        report.diffs.push_back(diff);
        report.iterations_run = m;
        if (cfg.keep_history) {
            report.history.push_back(state);
        }
        if (cfg.stop_tol > 0.0 && diff <= cfg.stop_tol) {
            break;
        }
    }
    report.final = std::move(state);

    if (sys.has_exact()) {
        std::vector<double> errors(grid.size(), 0.0);
        std::vector<std::vector<double>> values(k);
        for (std::size_t c = 0; c < k; ++c) {
            values[c] = report.nodal(c);
        }
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto expected = sys.exact(grid.node(i + 1));
            if (expected.size() != k) {
                throw Error(ErrorKind::ShapeMismatch, "exact solution has the wrong component count");
            }
            for (std::size_t c = 0; c < k; ++c) {
                errors[i] = std::max(errors[i], std::abs(values[c][i] - expected[c]));
            }
        }
        report.errors = std::move(errors);
    }
    report.wall_time = std::chrono::steady_clock::now() - started;
    return report;
}

std::vector<double> eval_solution(const SolveReport& report, double t)
{
    std::vector<double> out(report.final.size());
    for (std::size_t c = 0; c < out.size(); ++c) {
        out[c] = interp_eval(report.final[c], t) + report.initial[c];
    }
    return out;
}

}  // namespace ivim
