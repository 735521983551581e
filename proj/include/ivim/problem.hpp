#pragma once

#include "ivim/engine.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ivim {

/// Textual problem description; the in-memory form of a problem file.
struct ProblemSpec {
    struct Equation {
        double alpha = 0.0;
        std::string rhs;
    };

    std::string name;
    double a = 0.0;
    double T = 1.0;
    std::vector<Equation> equations;
    std::vector<double> initial;
    /// Closed-form solution per component, in t. Empty when unknown.
    std::vector<std::string> exact;
    /// Starting iterate of the shifted problem per component, in t. Empty means zero.
    std::vector<std::string> initial_iterate;
};

/// A ProblemSpec with its expressions compiled.
struct Problem {
    ProblemSpec spec;
    IvpSystem system;
    std::vector<std::function<double(double)>> initial_iterate;

    /// Projection of the starting iterate onto the grid, or nullopt for zero.
    std::optional<State> start(const Grid& grid) const;
};

bool is_builtin(std::string_view name);
ProblemSpec builtin_spec(std::string_view name);

/// Parses a problem document. Throws InvalidProblem for schema violations.
ProblemSpec spec_from_json(const nlohmann::json& doc);
nlohmann::json spec_to_json(const ProblemSpec& spec);

/// Reads and parses a problem file. Throws Io when unreadable and
/// InvalidProblem when malformed.
ProblemSpec load_problem_file(const std::filesystem::path& path);

/// Variable names available to rhs expressions: t, u1..uk, and u when k == 1.
std::vector<std::string> rhs_variables(std::size_t k);

/// Validates and compiles every expression.
Problem compile_problem(const ProblemSpec& spec);

/// Built-in name or path to a problem file.
Problem resolve_problem(const std::string& source);

}  // namespace ivim
