#include "ivim/cli.hpp"

#include "ivim/error.hpp"
#include "ivim/problem.hpp"
#include "ivim/reference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ivim::cli {

namespace {

using json = nlohmann::json;

int exit_code_for(const Error& e)
{
    switch (e.kind()) {
    case ErrorKind::Divergence: return kDivergence;
    case ErrorKind::Io: return kIoError;
    default: return kInputError;
    }
}

// Runs a command body and maps failures onto exit codes.
template <class Body>
int guarded(std::ostream& err, Body body)
{
    try {
        return body();
    } catch (const Error& e) {
        err << "error (" << to_string(e.kind()) << "): " << e.what();
        if (e.position()) {
            err << " [position " << *e.position() << "]";
        }
        err << '\n';
        return exit_code_for(e);
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error (io): " << e.what() << '\n';
        return kIoError;
    }
}

double round_millis(std::chrono::duration<double> d)
{
    return std::round(d.count() * 1000.0) / 1000.0;
}

json config_echo(const char* command, const CommonArgs& args, const Problem& problem)
{
    json doc;
    doc["command"] = command;
    doc["problem"] = problem.spec.name;
    doc["source"] = args.problem;
    doc["equations"] = problem.spec.equations.size();
    doc["interval"] = {{"a", problem.spec.a}, {"T", problem.spec.T}};
    doc["mode"] = std::string(to_string(args.mode));
    return doc;
}

SolveConfig make_config(const CommonArgs& args, std::size_t n, std::size_t m)
{
    SolveConfig cfg;
    cfg.n = n;
    cfg.m_max = m;
    cfg.mode = args.mode;
    cfg.threads = std::max(1u, args.threads);
    cfg.summation = args.summation;
    return cfg;
}

void prepare_out_dir(const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw Error(ErrorKind::Io, "cannot create output directory '" + dir.string() + "'");
    }
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

/// Reference protocol: the closed form when known (nothing to build here),
/// otherwise RK4 with step (T - a) / (100 (n_finest - 1)).
std::optional<ReferenceSolution> make_reference(const Problem& problem, std::size_t finest_n)
{
    const IvpSystem& sys = problem.system;
    if (sys.has_exact()) {
        return std::nullopt;
    }
    const double step = (sys.T - sys.a) / (100.0 * static_cast<double>(finest_n - 1));
    return rk4_reference(sys, step);
}

double max_error(const SolveReport& report, const std::optional<ReferenceSolution>& rk4)
{
    if (rk4) {
        return error_metrics(report, *rk4).max_abs;
    }
    return *std::max_element(report.errors->begin(), report.errors->end());
}

}  // namespace

std::string format_double(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v < 0 ? "-inf" : "inf";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_atomically(const std::filesystem::path& path, const std::string& contents)
{
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorKind::Io, "cannot write '" + tmp.string() + "'");
        }
        out << contents;
        out.flush();
        if (!out) {
            throw Error(ErrorKind::Io, "failed writing '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorKind::Io, "cannot move output into place at '" + path.string() + "'");
    }
}

int run_solve(const SolveArgs& args, std::ostream& err)
{
    return guarded(err, [&] {
        if (args.n < 2 || args.m < 1) {
            throw Error(ErrorKind::ConfigInvalid, "need n >= 2 and m >= 1");
        }
        const Problem problem = resolve_problem(args.problem);
        SolveConfig cfg = make_config(args, args.n, args.m);
        cfg.stop_tol = args.stop_tol;
        const Grid grid = make_grid(problem.system.a, problem.system.T, args.n);
        const SolveReport report = solve(problem.system, cfg, problem.start(grid));

        const std::size_t k = problem.system.size();
        const bool exact = problem.system.has_exact();
        std::ostringstream csv;
        csv << "t";
        for (std::size_t c = 1; c <= k; ++c) csv << ",u" << c;
        if (exact) {
            for (std::size_t c = 1; c <= k; ++c) csv << ",exact" << c;
            for (std::size_t c = 1; c <= k; ++c) csv << ",abs_err" << c;
            csv << ",log10_err";
        }
        csv << '\n';

        std::vector<std::vector<double>> values(k);
        for (std::size_t c = 0; c < k; ++c) {
            values[c] = report.nodal(c);
        }
        double max_abs = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double t = grid.node(i + 1);
            csv << format_double(t);
            for (std::size_t c = 0; c < k; ++c) csv << ',' << format_double(values[c][i]);
            if (exact) {
                const auto ex = problem.system.exact(t);
                for (std::size_t c = 0; c < k; ++c) csv << ',' << format_double(ex[c]);
                double node_err = 0.0;
                for (std::size_t c = 0; c < k; ++c) {
                    const double e = std::abs(values[c][i] - ex[c]);
                    node_err = std::max(node_err, e);
                    csv << ',' << format_double(e);
                }
                max_abs = std::max(max_abs, node_err);
                csv << ',' << format_double(node_err == 0.0 ? -INFINITY : std::log10(node_err));
            }
            csv << '\n';
        }

        json summary = config_echo("solve", args, problem);
        summary["n"] = args.n;
        summary["m"] = args.m;
        summary["stop_tol"] = args.stop_tol;
        summary["iterations_run"] = report.iterations_run;
        summary["final_diff"] = report.diffs.empty() ? 0.0 : report.diffs.back();
        if (exact) {
            summary["max_abs_error"] = max_abs;
        }
        if (!args.omit_timings) {
            summary["wall_time_seconds"] = round_millis(report.wall_time);
        }

        prepare_out_dir(args.out_dir);
        write_atomically(args.out_dir / "solution.csv", csv.str());
        write_atomically(args.out_dir / "summary.json", dump(summary));
        return static_cast<int>(kSuccess);
    });
}

int run_convergence(const ConvergenceArgs& args, std::ostream& err)
{
    return guarded(err, [&] {
        const bool sweep_n = !args.n_list.empty();
        if (sweep_n == !args.m_list.empty()) {
            throw Error(ErrorKind::ConfigInvalid, "give exactly one of an n sweep or an m sweep");
        }
        const auto& sweep = sweep_n ? args.n_list : args.m_list;
        if (!std::is_sorted(sweep.begin(), sweep.end()) ||
            std::adjacent_find(sweep.begin(), sweep.end()) != sweep.end()) {
            throw Error(ErrorKind::ConfigInvalid, "sweep values must be strictly ascending");
        }
        if (sweep_n ? args.m < 1 : args.n < 2) {
            throw Error(ErrorKind::ConfigInvalid, sweep_n ? "fixed m must be at least 1" : "fixed n must be at least 2");
        }
        if (sweep_n && sweep.front() < 2) {
            throw Error(ErrorKind::ConfigInvalid, "n must be at least 2");
        }

        const Problem problem = resolve_problem(args.problem);
        const std::size_t finest = sweep_n ? sweep.back() : args.n;
        const auto started = std::chrono::steady_clock::now();
        const auto rk4 = make_reference(problem, finest);

        struct Row {
            std::size_t n, m;
            double max_abs;
        };
        std::vector<Row> rows;
        for (std::size_t value : sweep) {
            const std::size_t n = sweep_n ? value : args.n;
            const std::size_t m = sweep_n ? args.m : value;
            const Grid grid = make_grid(problem.system.a, problem.system.T, n);
            const SolveReport report = solve(problem.system, make_config(args, n, m), problem.start(grid));
            rows.push_back({n, m, max_error(report, rk4)});
        }
        const auto elapsed = std::chrono::steady_clock::now() - started;

        std::ostringstream csv;
        csv << "n,m,max_abs,observed_order\n";
        json summary = config_echo("convergence", args, problem);
        summary["sweep"] = sweep_n ? "n" : "m";
        summary["reference"] = problem.system.has_exact() ? "closed_form" : "rk4";
        summary["rows"] = json::array();
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const Row& row = rows[i];
            std::string order;
            json order_json = nullptr;
            if (i > 0 && row.n - 1 == 2 * (rows[i - 1].n - 1) && row.max_abs > 0.0 && rows[i - 1].max_abs > 0.0) {
                const double p = empirical_order(rows[i - 1].max_abs, row.max_abs);
                order = format_double(p);
                order_json = p;
            }
            csv << row.n << ',' << row.m << ',' << format_double(row.max_abs) << ',' << order << '\n';
            summary["rows"].push_back({{"n", row.n}, {"m", row.m}, {"max_abs", row.max_abs},
                                       {"observed_order", order_json}});
        }
        if (!args.omit_timings) {
            summary["wall_time_seconds"] = round_millis(elapsed);
        }

        prepare_out_dir(args.out_dir);
        write_atomically(args.out_dir / "convergence.csv", csv.str());
        write_atomically(args.out_dir / "summary.json", dump(summary));
        return static_cast<int>(kSuccess);
    });
}

int run_compare(const CompareArgs& args, std::ostream& err)
{
    return guarded(err, [&] {
        if (args.n < 2 || args.m < 1) {
            throw Error(ErrorKind::ConfigInvalid, "need n >= 2 and m >= 1");
        }
        const Problem problem = resolve_problem(args.problem);
        const IvpSystem& sys = problem.system;

        const auto rk4_started = std::chrono::steady_clock::now();
        const ReferenceSolution rk4 = rk4_reference(sys, args.rk4_step);
        const std::chrono::duration<double> rk4_time = std::chrono::steady_clock::now() - rk4_started;

        const Grid grid = make_grid(sys.a, sys.T, args.n);
        if (rk4.nodes.size() < grid.size()) {
            throw Error(ErrorKind::GridMismatch, "RK4 step is coarser than the IVIM grid");
        }
        const SolveReport report = solve(sys, make_config(args, args.n, args.m), problem.start(grid));

        const std::size_t k = sys.size();
        std::vector<std::vector<double>> values(k);
        for (std::size_t c = 0; c < k; ++c) {
            values[c] = report.nodal(c);
        }

        std::ostringstream csv;
        csv << "t";
        for (std::size_t c = 1; c <= k; ++c) csv << ",ivim" << c;
        for (std::size_t c = 1; c <= k; ++c) csv << ",rk4_" << c;
        for (std::size_t c = 1; c <= k; ++c) csv << ",gap" << c;
        csv << '\n';
        double max_gap = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double t = grid.node(i + 1);
            const auto ref = rk4.at(t);
            csv << format_double(t);
            for (std::size_t c = 0; c < k; ++c) csv << ',' << format_double(values[c][i]);
            for (std::size_t c = 0; c < k; ++c) csv << ',' << format_double(ref[c]);
            for (std::size_t c = 0; c < k; ++c) {
                const double gap = std::abs(values[c][i] - ref[c]);
                max_gap = std::max(max_gap, gap);
                csv << ',' << format_double(gap);
            }
            csv << '\n';
        }

        json summary = config_echo("compare", args, problem);
        summary["n"] = args.n;
        summary["m"] = args.m;
        summary["rk4_step"] = args.rk4_step;
        summary["iterations_run"] = report.iterations_run;
        summary["max_gap"] = max_gap;
        if (report.errors) {
            summary["ivim_max_abs_error"] = *std::max_element(report.errors->begin(), report.errors->end());
        }
        if (!args.omit_timings) {
            summary["ivim_wall_time_seconds"] = round_millis(report.wall_time);
            summary["rk4_wall_time_seconds"] = round_millis(rk4_time);
        }

        prepare_out_dir(args.out_dir);
        write_atomically(args.out_dir / "compare.csv", csv.str());
        write_atomically(args.out_dir / "summary.json", dump(summary));
        return static_cast<int>(kSuccess);
    });
}

int run_export(const ExportArgs& args, std::ostream& err)
{
    return guarded(err, [&] {
        const ProblemSpec spec =
            is_builtin(args.problem) ? builtin_spec(args.problem) : load_problem_file(args.problem);
        compile_problem(spec);
        if (args.out_file.has_parent_path()) {
            prepare_out_dir(args.out_file.parent_path());
        }
        write_atomically(args.out_file, dump(spec_to_json(spec)));
        return static_cast<int>(kSuccess);
    });
}

}  // namespace ivim::cli
