#include "ivim/cli.hpp"
#include "ivim/error.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

namespace {

void add_common(CLI::App& cmd, ivim::cli::CommonArgs& args, std::string& mode, std::string& summation)
{
    cmd.add_option("--problem", args.problem, "Built-in ex1|ex2|ex3 or path to a JSON problem file")
        ->required();
    cmd.add_option("--mode", mode, "Quadrature mode")
        ->check(CLI::IsMember({"paper", "full_trapezoid"}))
        ->default_val("paper");
    cmd.add_option("--out", args.out_dir, "Output directory")->required();
    cmd.add_option("--threads", args.threads, "Worker threads inside one iteration")
        ->default_val(1)
        ->check(CLI::PositiveNumber);
    cmd.add_option("--summation", summation,
                   "auto: prefix sums for exponential multipliers; direct: O(n^2) sums")
        ->check(CLI::IsMember({"auto", "direct"}))
        ->default_val("auto");
    cmd.add_flag("--omit-timings", args.omit_timings, "Leave wall-clock times out of summary.json");
}

void finish_common(ivim::cli::CommonArgs& args, const std::string& mode, const std::string& summation)
{
    args.mode = ivim::parse_mode(mode);
    args.summation = summation == "direct" ? ivim::Summation::Direct : ivim::Summation::Automatic;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Interpolated variational iteration solver for initial value problems"};
    app.require_subcommand(1);

    std::string mode;
    std::string summation;

    ivim::cli::SolveArgs solve_args;
    auto* solve = app.add_subcommand("solve", "Solve one problem; writes solution.csv and summary.json");
    add_common(*solve, solve_args, mode, summation);
    solve->add_option("--n", solve_args.n, "Grid nodes")->required();
    solve->add_option("--m", solve_args.m, "Iterations")->required();
    solve->add_option("--stop-tol", solve_args.stop_tol,
                      "Stop once the successive-difference max-norm is at most this (0 = off)")
        ->default_val(0.0);

    ivim::cli::ConvergenceArgs conv_args;
    auto* conv = app.add_subcommand("convergence", "Sweep n or m; writes convergence.csv and summary.json");
    add_common(*conv, conv_args, mode, summation);
    auto* n_list = conv->add_option("--n-list", conv_args.n_list, "Ascending node counts")->delimiter(',');
    auto* m_list = conv->add_option("--m-list", conv_args.m_list, "Ascending iteration counts")->delimiter(',');
    n_list->excludes(m_list);
    conv->add_option("--n", conv_args.n, "Fixed node count for an m sweep");
    conv->add_option("--m", conv_args.m, "Fixed iteration count for an n sweep");

    ivim::cli::CompareArgs cmp_args;
    auto* cmp = app.add_subcommand("compare", "IVIM against RK4; writes compare.csv and summary.json");
    add_common(*cmp, cmp_args, mode, summation);
    cmp->add_option("--n", cmp_args.n, "Grid nodes")->required();
    cmp->add_option("--m", cmp_args.m, "Iterations")->required();
    cmp->add_option("--rk4-step", cmp_args.rk4_step, "RK4 step; must divide T - a")->required();

    ivim::cli::ExportArgs export_args;
    auto* exp = app.add_subcommand("export", "Write a problem as a JSON problem file");
    exp->add_option("--problem", export_args.problem, "Built-in name or problem file")->required();
    exp->add_option("--out", export_args.out_file, "Destination file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : ivim::cli::kInputError;
    }

    if (*solve) {
        finish_common(solve_args, mode, summation);
        return ivim::cli::run_solve(solve_args, std::cerr);
    }
    if (*conv) {
        finish_common(conv_args, mode, summation);
        return ivim::cli::run_convergence(conv_args, std::cerr);
    }
    if (*cmp) {
        finish_common(cmp_args, mode, summation);
        return ivim::cli::run_compare(cmp_args, std::cerr);
    }
    return ivim::cli::run_export(export_args, std::cerr);
}
