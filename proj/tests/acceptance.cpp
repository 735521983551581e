// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include "ivim/cli.hpp"
#include "ivim/engine.hpp"
#include "ivim/error.hpp"
#include "ivim/expr.hpp"
#include "ivim/problem.hpp"
#include "ivim/reference.hpp"

#include "oracles.hpp"
#include "test_support.hpp"
#include "thresholds.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace ivim;
namespace frozen = ivim::testing::frozen;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

class Checks {
public:
    void expect(bool ok, const std::string& what)
    {
        if (!ok) {
            pass_ = false;
            failures_ << (failures_.tellp() > 0 ? "; " : "") << what;
        } else {
            notes_ << (notes_.tellp() > 0 ? "; " : "") << what;
        }
    }
    Outcome outcome() const
    {
        if (pass_) {
            return {true, notes_.str()};
        }
        const std::string ok = notes_.str();
        return {false, "failed: " + failures_.str() + (ok.empty() ? "" : " | ok: " + ok)};
    }

private:
    bool pass_ = true;
    std::ostringstream failures_;
    std::ostringstream notes_;
};

std::string fmt(double v, const char* spec = "%.4g")
{
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<std::vector<double>> rows_of(const State& s)
{
    std::vector<std::vector<double>> rows;
    for (const auto& c : s) {
        rows.emplace_back(c.values().begin(), c.values().end());
    }
    return rows;
}

double max_error_of(const State& s, const Problem& p)
{
    const Grid& g = s.front().grid();
    double err = 0.0;
    for (std::size_t i = 1; i <= g.size(); ++i) {
        const auto exact = p.system.exact(g.node(i));
        for (std::size_t c = 0; c < s.size(); ++c) {
            err = std::max(err, std::abs(s[c].value(i) + p.system.initial[c] - exact[c]));
        }
    }
    return err;
}

double max_error_at(const Problem& p, std::size_t n, std::size_t m, QuadratureMode mode)
{
    const Grid g = make_grid(p.system.a, p.system.T, n);
    const auto report = solve(p.system, {.n = n, .m_max = m, .mode = mode}, p.start(g));
    return *std::max_element(report.errors->begin(), report.errors->end());
}

// ---------------------------------------------------------------- criteria

Outcome fidelity()
{
    Checks checks;
    double engine_seconds = 0.0;
    for (const char* name : {"ex1", "ex2", "ex3"}) {
        const auto p = compile_problem(builtin_spec(name));
        const Grid g = make_grid(p.system.a, p.system.T, 129);
        const auto start = p.start(g);
        const auto t0 = std::chrono::steady_clock::now();
        const auto report = solve(p.system, {.n = 129, .m_max = 5}, start);
        engine_seconds += seconds_since(t0);

        const testing::DirectProblem direct{p.system.a, p.system.T, p.system.alpha,
                                            std::vector<testing::Rhs>(p.system.rhs.begin(), p.system.rhs.end())};
        const auto u0 = start ? rows_of(*start)
                              : std::vector<std::vector<double>>(p.system.size(), std::vector<double>(129, 0.0));
        const auto expected = testing::direct_solve(direct, 129, 5, u0, false);
        const auto got = rows_of(report.final);
        double gap = 0.0;
        for (std::size_t c = 0; c < got.size(); ++c) {
            for (std::size_t i = 0; i < got[c].size(); ++i) {
                gap = std::max(gap, std::abs(got[c][i] - expected[c][i]));
            }
        }
        checks.expect(gap <= 1e-12, std::string(name) + " gap " + fmt(gap));
    }
    checks.expect(engine_seconds < 1.0, "runtime " + fmt(engine_seconds, "%.3f") + " s");
    return checks.outcome();
}

Outcome trivial_exactness()
{
    Checks checks;
    IvpSystem sys;
    sys.alpha = {0.0};
    sys.rhs = {[](double, std::span<const double>) { return 1.0; }};
    sys.initial = {0.0};
    const std::vector<Multiplier> mults{exp_multiplier(0.0)};
    for (std::size_t n : {2u, 17u, 100u}) {
        const Grid g = make_grid(0.0, 1.0, n);
        const State zero{PiecewiseLinear(g)};
        const auto paper = ivim_step(zero, sys, g, mults, {QuadratureMode::Paper});
        const auto full = ivim_step(zero, sys, g, mults, {QuadratureMode::FullTrapezoid});
        double paper_gap = 0.0;
        double full_gap = 0.0;
        for (std::size_t i = 2; i <= n; ++i) {
            paper_gap = std::max(paper_gap, std::abs(paper[0].value(i) - (g.node(i) - 0.5 * g.step())));
            full_gap = std::max(full_gap, std::abs(full[0].value(i) - g.node(i)));
        }
        checks.expect(paper_gap <= 1e-12 && full_gap <= 1e-12,
                      "n=" + std::to_string(n) + " gaps " + fmt(paper_gap) + "/" + fmt(full_gap));
    }
    return checks.outcome();
}

Outcome linear_idempotence()
{
    Checks checks;
    const std::size_t n = 1000;
    IvpSystem sys;
    sys.alpha = {-1.0};
    sys.rhs = {[](double, std::span<const double> u) { return u[0] + 1.0; }};
    sys.initial = {0.0};
    const Grid g = make_grid(0.0, 1.0, n);
    const std::vector<Multiplier> mults{exp_multiplier(-1.0)};
    const State zero{PiecewiseLinear(g)};

    for (auto mode : {QuadratureMode::Paper, QuadratureMode::FullTrapezoid}) {
        const auto one = ivim_step(zero, sys, g, mults, {mode});
        const auto two = ivim_step(one, sys, g, mults, {mode});
        std::size_t mismatches = 0;
        double worst = 0.0;
        for (std::size_t i = 1; i <= n; ++i) {
            if (one[0].value(i) != two[0].value(i)) {
                ++mismatches;
                worst = std::max(worst, std::abs(one[0].value(i) - two[0].value(i)));
            }
        }
        checks.expect(mismatches == 0, std::string(to_string(mode)) + " iterate 2 == iterate 1 bitwise (" +
                                           std::to_string(mismatches) + " nodes differ, max " + fmt(worst) + ")");
    }

    const auto full = ivim_step(zero, sys, g, mults, {QuadratureMode::FullTrapezoid});
    double gap = 0.0;
    for (std::size_t i = 2; i <= n; ++i) {
        const double t = g.node(i);
        const double oracle = testing::composite_trapezoid([t](double s) { return std::exp(t - s); }, 0.0, t, i - 1);
        gap = std::max(gap, std::abs(full[0].value(i) - oracle));
    }
    checks.expect(gap <= 1e-12, "trapezoid oracle gap " + fmt(gap));
    return checks.outcome();
}

Outcome contraction()
{
    Checks checks;
    const auto p = compile_problem(builtin_spec("ex1"));
    const auto t0 = std::chrono::steady_clock::now();
    const auto report = solve(p.system, {.n = 4000, .m_max = 10, .keep_history = true});
    const double elapsed = seconds_since(t0);
    std::vector<double> errors;
    for (const auto& state : report.history) {
        errors.push_back(max_error_of(state, p));
    }
    bool decreasing = true;
    for (std::size_t m = 1; m < 8; ++m) {
        decreasing = decreasing && errors[m] < errors[m - 1];
    }
    checks.expect(decreasing, "E(m) strictly decreasing for m=1..8");
    const double ratio = errors[9] / errors[0];
    checks.expect(ratio <= frozen::kContractionRatio,
                  "E(10)/E(1) = " + fmt(ratio) + " <= " + fmt(frozen::kContractionRatio));
    checks.expect(elapsed < 10.0, "runtime " + fmt(elapsed, "%.2f") + " s");
    return checks.outcome();
}

Outcome order_in_h()
{
    Checks checks;
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<std::size_t> ns{1000, 2000, 4000};
    const auto orders = [&](const Problem& p, QuadratureMode mode) {
        std::vector<double> errs;
        for (std::size_t n : ns) {
            errs.push_back(max_error_at(p, n, 40, mode));
        }
        std::vector<std::pair<double, double>> out;  // (order, ratio)
        for (std::size_t j = 1; j < ns.size(); ++j) {
            const double h_ratio = static_cast<double>(ns[j] - 1) / static_cast<double>(ns[j - 1] - 1);
            const double ratio = errs[j - 1] / errs[j];
            out.emplace_back(std::log(ratio) / std::log(h_ratio), ratio);
        }
        return out;
    };
    const auto bracket = [&](const std::string& label, const std::vector<std::pair<double, double>>& o, double lo,
                             double hi) {
        bool ok = true;
        std::string shown;
        for (const auto& [order, ratio] : o) {
            ok = ok && order >= lo && order <= hi;
            shown += (shown.empty() ? "" : ",") + fmt(order, "%.3f");
        }
        checks.expect(ok, label + " orders " + shown + " in [" + fmt(lo) + ", " + fmt(hi) + "]");
    };

    const auto ex1 = compile_problem(builtin_spec("ex1"));
    const auto ex2 = compile_problem(builtin_spec("ex2"));
    const auto ex3 = compile_problem(builtin_spec("ex3"));
    bracket("ex1 paper", orders(ex1, QuadratureMode::Paper), 0.8, 1.2);
    bracket("ex1 full_trapezoid", orders(ex1, QuadratureMode::FullTrapezoid), 1.7, 2.3);
    bracket("ex3 paper", orders(ex3, QuadratureMode::Paper), 1.7, 2.3);

    bool ratios_ok = true;
    std::string shown;
    for (const auto& [order, ratio] : orders(ex2, QuadratureMode::Paper)) {
        ratios_ok = ratios_ok && ratio >= 2.5;
        shown += (shown.empty() ? "" : ",") + fmt(ratio, "%.3f");
    }
    checks.expect(ratios_ok, "ex2 error ratios per doubling " + shown + " >= 2.5");
    const double elapsed = seconds_since(t0);
    checks.expect(elapsed < 60.0, "runtime " + fmt(elapsed, "%.2f") + " s");
    return checks.outcome();
}

Outcome sweep_protocol()
{
    Checks checks;
    testing::ScratchDir dir("accept-conv");
    cli::ConvergenceArgs args;
    args.problem = "ex1";
    args.out_dir = dir.path();
    args.m = 10;
    for (const auto& [n, bound] : frozen::kEx1M10) {
        args.n_list.push_back(n);
    }
    std::ostringstream err;
    const int code = cli::run_convergence(args, err);
    checks.expect(code == 0, "run_convergence exit " + std::to_string(code));
    if (code != 0) {
        return checks.outcome();
    }
    const auto rows = testing::read_csv(dir / "convergence.csv");
    checks.expect(rows.size() == frozen::kEx1M10.size() + 1, std::to_string(rows.size() - 1) + " rows");
    double previous = INFINITY;
    bool monotone = true;
    for (std::size_t i = 0; i + 1 < rows.size() && i < frozen::kEx1M10.size(); ++i) {
        const double e = std::stod(rows[i + 1][2]);
        const auto [n, bound] = frozen::kEx1M10[i];
        monotone = monotone && e < previous;
        previous = e;
        checks.expect(e <= bound, "n=" + std::to_string(n) + " " + fmt(e) + " <= " + fmt(bound));
    }
    checks.expect(monotone, "errors decrease with n");
    return checks.outcome();
}

Outcome endpoints()
{
    Checks checks;
    const std::vector<std::pair<const char*, double>> cases{
        {"ex1", frozen::kEx1N257M10}, {"ex2", frozen::kEx2N257M10}, {"ex3", frozen::kEx3N257M10}};
    for (const auto& [name, bound] : cases) {
        const auto p = compile_problem(builtin_spec(name));
        const Grid g = make_grid(p.system.a, p.system.T, 257);
        const auto report = solve(p.system, {.n = 257, .m_max = 10}, p.start(g));
        const auto got = eval_solution(report, p.system.T);
        const auto exact = exact_builtin_eval(name, p.system.T);
        double gap = 0.0;
        std::string shown;
        for (std::size_t c = 0; c < got.size(); ++c) {
            gap = std::max(gap, std::abs(got[c] - exact[c]));
            shown += (shown.empty() ? "" : ",") + fmt(got[c], "%.7f");
        }
        checks.expect(gap <= bound, std::string(name) + " u(T)=(" + shown + ") gap " + fmt(gap) + " <= " + fmt(bound));
    }
    return checks.outcome();
}

Outcome oracle_health()
{
    Checks checks;
    IvpSystem growth;
    growth.alpha = {0.0};
    growth.rhs = {[](double, std::span<const double> u) { return u[0]; }};
    growth.initial = {1.0};
    const double e1 = std::abs(rk4_reference(growth, 0.1).values.back()[0] - std::numbers::e);
    const double e2 = std::abs(rk4_reference(growth, 0.05).values.back()[0] - std::numbers::e);
    const double order = empirical_order(e1, e2);
    checks.expect(order >= 3.8 && order <= 4.2, "RK4 order " + fmt(order, "%.3f"));

    for (const char* name : {"ex1", "ex2", "ex3"}) {
        const auto p = compile_problem(builtin_spec(name));
        const auto [a, T] = builtin_interval(name);
        const double d = 1e-6;
        double worst = 0.0;
        for (int j = 1; j <= 50; ++j) {
            const double t = a + (T - a) * j / 51.0;
            const auto u = exact_builtin_eval(name, t);
            const auto up = exact_builtin_eval(name, t + d);
            const auto um = exact_builtin_eval(name, t - d);
            for (std::size_t c = 0; c < u.size(); ++c) {
                worst = std::max(worst, std::abs((up[c] - um[c]) / (2 * d) - p.system.rhs[c](t, u)));
            }
        }
        checks.expect(worst <= 1e-6, std::string(name) + " ODE residual " + fmt(worst));
    }
    return checks.outcome();
}

Outcome dsl_suite()
{
    using namespace ivim::dsl;
    Checks checks;
    const auto ev = [](std::string_view src, const Environment& env) { return eval_expr(parse(src), env); };
    checks.expect(ev("-u^2", {{"u", 3.0}}) == -9.0 && ev("2 + 3*4", {}) == 14.0 && ev("2*-3", {}) == -6.0,
                  "precedence");
    checks.expect(ev("u^2^3", {{"u", 2.0}}) == 256.0 && ev("10 - 4 - 3", {}) == 3.0 && ev("64/4/2", {}) == 8.0,
                  "associativity");
    bool even_rejected = false;
    try {
        ev("nthroot(-16, 4)", {});
    } catch (const Error& e) {
        even_rejected = e.kind() == ErrorKind::DomainError;
    }
    checks.expect(std::abs(ev("nthroot(-8, 3)", {}) + 2.0) < 1e-15 && even_rejected &&
                      std::abs(ev("5/3*nthroot(u^2,5)*cos(t)", {{"t", 0.0}, {"u", 1.0}}) - 5.0 / 3.0) < 1e-15,
                  "nthroot semantics");

    const auto error_at = [](std::string_view src) -> std::pair<ErrorKind, std::size_t> {
        try {
            parse(src);
        } catch (const Error& e) {
            return {e.kind(), e.position().value_or(9999)};
        }
        return {ErrorKind::Io, 9999};
    };
    checks.expect(error_at("2..5") == std::make_pair(ErrorKind::IllegalCharacter, std::size_t{2}) &&
                      error_at("(1+").first == ErrorKind::UnbalancedParen &&
                      error_at("1 2") == std::make_pair(ErrorKind::TrailingInput, std::size_t{2}) &&
                      error_at("2 * * 3") == std::make_pair(ErrorKind::UnexpectedToken, std::size_t{4}),
                  "positioned errors");

    static constexpr std::string_view kAlphabet = "0123456789.eE+-*/^(),tu12 sincoexplgqrtahbp$#";
    std::mt19937_64 rng(99);
    int handled = 0;
    for (int i = 0; i < 1000; ++i) {
        std::string src;
        const std::size_t len = std::uniform_int_distribution<std::size_t>(0, 48)(rng);
        for (std::size_t j = 0; j < len; ++j) {
            src += kAlphabet[std::uniform_int_distribution<std::size_t>(0, kAlphabet.size() - 1)(rng)];
        }
        try {
            const Expr e = parse(src);
            try {
                eval_expr(e, {{"t", 0.5}, {"u", -0.25}, {"u1", 1.0}, {"u2", 2.0}});
            } catch (const Error&) {
            }
            ++handled;
        } catch (const Error& e) {
            handled += e.position().has_value() ? 1 : 0;
        }
    }
    checks.expect(handled == 1000, "fuzz " + std::to_string(handled) + "/1000 handled");
    return checks.outcome();
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(IVIM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string strip_timings(const std::string& text)
{
    auto doc = nlohmann::json::parse(text);
    for (const char* key : {"wall_time_seconds", "ivim_wall_time_seconds", "rk4_wall_time_seconds"}) {
        doc.erase(key);
    }
    return doc.dump();
}

Outcome determinism()
{
    Checks checks;
    testing::ScratchDir dir("accept-det");
    struct Command {
        std::string name;
        std::string args;
        std::vector<std::string> files;
    };
    const std::vector<Command> commands{
        {"solve", "solve --problem ex3 --n 400 --m 12", {"solution.csv", "summary.json"}},
        {"solve-direct", "solve --problem ex1 --n 300 --m 8 --summation direct", {"solution.csv", "summary.json"}},
        {"convergence", "convergence --problem ex2 --n-list 65,129,257 --m 10", {"convergence.csv", "summary.json"}},
        {"compare", "compare --problem ex1 --n 101 --m 8 --rk4-step 0.001", {"compare.csv", "summary.json"}},
    };
    for (const auto& cmd : commands) {
        std::vector<std::string> runs;
        std::vector<std::string> timed;
        int slot = 0;
        for (const std::string threads : {"1", "1", "4", "7"}) {
            const auto out = dir / (cmd.name + "-" + std::to_string(slot++));
            const int code = run_cli(cmd.args + " --threads " + threads + " --omit-timings --out " + out.string());
            std::string bytes = std::to_string(code);
            for (const auto& f : cmd.files) {
                bytes += "\n" + testing::read_file(out / f);
            }
            runs.push_back(bytes);

            const auto timed_out = dir / (cmd.name + "-timed-" + std::to_string(slot));
            run_cli(cmd.args + " --threads " + threads + " --out " + timed_out.string());
            timed.push_back(testing::read_file(timed_out / cmd.files[0]) +
                            strip_timings(testing::read_file(timed_out / "summary.json")));
        }
        bool same = runs[0].front() == '0';
        for (const auto& r : runs) {
            same = same && r == runs[0];
        }
        for (const auto& r : timed) {
            same = same && r == timed[0];
        }
        checks.expect(same, cmd.name + " byte-identical over threads 1,1,4,7");
    }

    std::vector<std::string> exports;
    for (int i = 0; i < 2; ++i) {
        const auto out = dir / ("export-" + std::to_string(i) + ".json");
        const int code = run_cli("export --problem ex2 --out " + out.string());
        exports.push_back(std::to_string(code) + testing::read_file(out));
    }
    checks.expect(exports[0] == exports[1] && exports[0].front() == '0', "export byte-identical");
    return checks.outcome();
}

}  // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"1 direct-formula fidelity", fidelity},
        {"2 trivial exactness", trivial_exactness},
        {"3 linear idempotence", linear_idempotence},
        {"4 contraction in m", contraction},
        {"5 order in h", order_in_h},
        {"6 convergence sweep protocol", sweep_protocol},
        {"7 end-point values", endpoints},
        {"8 oracle health", oracle_health},
        {"9 DSL suite", dsl_suite},
        {"10 determinism", determinism},
    };
    int failed = 0;
    for (const auto& [label, check] : criteria) {
        Outcome outcome{false, ""};
        try {
            outcome = check();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        failed += outcome.pass ? 0 : 1;
        std::printf("%s criterion %s: %s\n", outcome.pass ? "PASS" : "FAIL", label.c_str(), outcome.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
