#pragma once

#include "ivim/engine.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ivim::cli {

enum ExitCode : int {
    kSuccess = 0,
    kInputError = 1,
    kDivergence = 2,
    kIoError = 3,
};

struct CommonArgs {
    std::string problem;  // ex1 | ex2 | ex3 | path to a problem file
    QuadratureMode mode = QuadratureMode::Paper;
    std::filesystem::path out_dir;
    unsigned threads = 1;
    Summation summation = Summation::Automatic;
    /// Leaves wall-clock entries out of summary.json.
    bool omit_timings = false;
};

struct SolveArgs : CommonArgs {
    std::size_t n = 41;
    std::size_t m = 10;
    double stop_tol = 0.0;
};

struct ConvergenceArgs : CommonArgs {
    /// Exactly one of n_list / m_list is non-empty; the other parameter is fixed.
    std::vector<std::size_t> n_list;
    std::vector<std::size_t> m_list;
    std::size_t n = 0;
    std::size_t m = 0;
};

struct CompareArgs : CommonArgs {
    std::size_t n = 41;
    std::size_t m = 10;
    double rk4_step = 1e-4;
};

struct ExportArgs {
    std::string problem;
    std::filesystem::path out_file;
};

/// Writes solution.csv and summary.json.
int run_solve(const SolveArgs& args, std::ostream& err);
/// Writes convergence.csv and summary.json.
int run_convergence(const ConvergenceArgs& args, std::ostream& err);
/// Writes compare.csv and summary.json.
int run_compare(const CompareArgs& args, std::ostream& err);
/// Writes a problem file for a built-in (or re-serializes a file).
int run_export(const ExportArgs& args, std::ostream& err);

/// %.17g rendering; -inf/inf/nan spelled out.
std::string format_double(double v);

/// Writes `contents` to a sibling temporary and renames it over `path`.
void write_atomically(const std::filesystem::path& path, const std::string& contents);

}  // namespace ivim::cli
