#include "ivim/problem.hpp"

#include "ivim/error.hpp"
#include "ivim/expr.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

namespace ivim {

namespace {

using Aliases = std::map<std::string, std::size_t, std::less<>>;

dsl::CompiledExpr compile_text(const std::string& text, const std::vector<std::string>& names,
                               const std::string& where)
{
    try {
        const dsl::Expr e = dsl::parse(text);
        dsl::validate_vars(e, std::set<std::string, std::less<>>(names.begin(), names.end()));
        Aliases aliases;
        for (std::size_t i = 0; i < names.size(); ++i) {
            aliases[names[i]] = i;
        }
        // "u" and "u1" share a slot in scalar problems.
        if (names.size() == 3 && names[2] == "u") {
            aliases["u"] = 1;
        }
        return dsl::CompiledExpr(e, aliases);
    } catch (const Error& err) {
        throw Error(err.kind(), where + ": " + err.what(), err.position());
    }
}

double number_field(const nlohmann::json& obj, const char* key, const std::string& where)
{
    if (!obj.is_object() || !obj.contains(key) || !obj.at(key).is_number()) {
        throw Error(ErrorKind::InvalidProblem, where + " needs a numeric '" + key + "'");
    }
    const double v = obj.at(key).get<double>();
    if (!std::isfinite(v)) {
        throw Error(ErrorKind::InvalidProblem, where + "." + key + " must be finite");
    }
    return v;
}

std::vector<std::string> string_list(const nlohmann::json& doc, const char* key)
{
    std::vector<std::string> out;
    if (!doc.contains(key) || doc.at(key).is_null()) {
        return out;
    }
    const auto& list = doc.at(key);
    if (!list.is_array()) {
        throw Error(ErrorKind::InvalidProblem, std::string("'") + key + "' must be a list of expressions");
    }
    for (const auto& item : list) {
        if (!item.is_string()) {
            throw Error(ErrorKind::InvalidProblem, std::string("'") + key + "' entries must be strings");
        }
        out.push_back(item.get<std::string>());
    }
    return out;
}

}  // namespace

std::optional<State> Problem::start(const Grid& grid) const
{
    if (initial_iterate.empty()) {
        return std::nullopt;
    }
    State state;
    for (const auto& sampler : initial_iterate) {
        state.push_back(project_samples(grid, sampler));
    }
    return state;
}

bool is_builtin(std::string_view name) { return name == "ex1" || name == "ex2" || name == "ex3"; }

ProblemSpec builtin_spec(std::string_view name)
{
    ProblemSpec spec;
    spec.name = std::string(name);
    if (name == "ex1") {
        // Riccati equation, L u = u' - 2u.
        spec.a = 0.0;
        spec.T = 1.0;
        spec.equations = {{-2.0, "2*u - u^2 + 1"}};
        spec.initial = {0.0};
        spec.exact = {"1 + sqrt(2)*tanh(sqrt(2)*t + 0.5*log((sqrt(2) - 1)/(sqrt(2) + 1)))"};
        return spec;
    }
    if (name == "ex2") {
        // u = 0 is also a fixed point of this non-Lipschitz iteration, so start away from it.
        spec.a = 0.0;
        spec.T = 3.0;
        spec.equations = {{0.0, "5/3*nthroot(u^2, 5)*cos(t)"}};
        spec.initial = {0.0};
        spec.exact = {"sin(t)*nthroot(sin(t)^2, 3)"};
        spec.initial_iterate = {"t"};
        return spec;
    }
    if (name == "ex3") {
        // u'' - 2u'^2 + u' + u = g as the system u1' = u2, u2' + u2 = 2 u2^2 - u1 + g.
        spec.a = 0.0;
        spec.T = 1.5;
        spec.equations = {
            {0.0, "u2"},
            {1.0, "-u2 - u1 + 2*u2^2 + t + 2*sin(t/2)^2 - 8*sin(t/2)^4"},
        };
        spec.initial = {0.0, 0.0};
        spec.exact = {"t - sin(t)", "1 - cos(t)"};
        return spec;
    }
    throw Error(ErrorKind::UnknownProblem, "unknown built-in problem '" + std::string(name) + "'");
}

ProblemSpec spec_from_json(const nlohmann::json& doc)
{
    if (!doc.is_object()) {
        throw Error(ErrorKind::InvalidProblem, "problem document must be a JSON object");
    }
    ProblemSpec spec;
    if (!doc.contains("name") || !doc.at("name").is_string()) {
        throw Error(ErrorKind::InvalidProblem, "problem needs a string 'name'");
    }
    spec.name = doc.at("name").get<std::string>();
    if (!doc.contains("interval")) {
        throw Error(ErrorKind::InvalidProblem, "problem needs an 'interval' object");
    }
    spec.a = number_field(doc.at("interval"), "a", "interval");
    spec.T = number_field(doc.at("interval"), "T", "interval");
    if (!(spec.T > spec.a)) {
        throw Error(ErrorKind::InvalidProblem, "interval requires a < T");
    }

    if (!doc.contains("equations") || !doc.at("equations").is_array() || doc.at("equations").empty()) {
        throw Error(ErrorKind::InvalidProblem, "problem needs a nonempty 'equations' list");
    }
    for (std::size_t i = 0; i < doc.at("equations").size(); ++i) {
        const auto& eq = doc.at("equations").at(i);
        const std::string where = "equations[" + std::to_string(i) + "]";
        ProblemSpec::Equation equation;
        equation.alpha = number_field(eq, "alpha", where);
        if (!eq.contains("rhs") || !eq.at("rhs").is_string()) {
            throw Error(ErrorKind::InvalidProblem, where + " needs a string 'rhs'");
        }
        equation.rhs = eq.at("rhs").get<std::string>();
        spec.equations.push_back(std::move(equation));
    }

    if (!doc.contains("initial") || !doc.at("initial").is_array()) {
        throw Error(ErrorKind::InvalidProblem, "problem needs an 'initial' list");
    }
    for (const auto& v : doc.at("initial")) {
        if (!v.is_number() || !std::isfinite(v.get<double>())) {
            throw Error(ErrorKind::InvalidProblem, "'initial' entries must be finite numbers");
        }
        spec.initial.push_back(v.get<double>());
    }
    if (spec.initial.size() != spec.equations.size()) {
        throw Error(ErrorKind::InvalidProblem, "'initial' must have one value per equation");
    }
    spec.exact = string_list(doc, "exact");
    if (!spec.exact.empty() && spec.exact.size() != spec.equations.size()) {
        throw Error(ErrorKind::InvalidProblem, "'exact' must have one expression per equation");
    }
    spec.initial_iterate = string_list(doc, "initial_iterate");
    if (!spec.initial_iterate.empty() && spec.initial_iterate.size() != spec.equations.size()) {
        throw Error(ErrorKind::InvalidProblem, "'initial_iterate' must have one expression per equation");
    }
    return spec;
}

nlohmann::json spec_to_json(const ProblemSpec& spec)
{
    nlohmann::json doc;
    doc["name"] = spec.name;
    doc["interval"] = {{"a", spec.a}, {"T", spec.T}};
    doc["equations"] = nlohmann::json::array();
    for (const auto& eq : spec.equations) {
        doc["equations"].push_back({{"alpha", eq.alpha}, {"rhs", eq.rhs}});
    }
    doc["initial"] = spec.initial;
    if (!spec.exact.empty()) {
        doc["exact"] = spec.exact;
    }
    if (!spec.initial_iterate.empty()) {
        doc["initial_iterate"] = spec.initial_iterate;
    }
    return doc;
}

ProblemSpec load_problem_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open problem file '" + path.string() + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(buffer.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::InvalidProblem, "malformed JSON in '" + path.string() + "': " + e.what(),
                    e.byte);
    }
    return spec_from_json(doc);
}

std::vector<std::string> rhs_variables(std::size_t k)
{
    std::vector<std::string> names{"t"};
    for (std::size_t i = 1; i <= k; ++i) {
        names.push_back("u" + std::to_string(i));
    }
    if (k == 1) {
        names.push_back("u");
    }
    return names;
}

Problem compile_problem(const ProblemSpec& spec)
{
    const std::size_t k = spec.equations.size();
    if (k == 0) {
        throw Error(ErrorKind::InvalidProblem, "problem has no equations");
    }
    if (spec.initial.size() != k) {
        throw Error(ErrorKind::InvalidProblem, "'initial' must have one value per equation");
    }

    Problem problem;
    problem.spec = spec;
    IvpSystem& sys = problem.system;
    sys.a = spec.a;
    sys.T = spec.T;
    sys.initial = spec.initial;

    const auto names = rhs_variables(k);
    for (std::size_t c = 0; c < k; ++c) {
        const auto& eq = spec.equations[c];
        sys.alpha.push_back(eq.alpha);
        auto program = std::make_shared<const dsl::CompiledExpr>(
            compile_text(eq.rhs, names, "equations[" + std::to_string(c) + "].rhs"));
        sys.rhs.push_back([program, k](double t, std::span<const double> state) {
            thread_local std::vector<double> slots;
            slots.resize(k + 1);
            slots[0] = t;
            std::copy(state.begin(), state.end(), slots.begin() + 1);
            return (*program)(slots);
        });
    }

    const std::vector<std::string> time_only{"t"};
    if (!spec.exact.empty()) {
        std::vector<std::shared_ptr<const dsl::CompiledExpr>> programs;
        for (std::size_t c = 0; c < spec.exact.size(); ++c) {
            programs.push_back(std::make_shared<const dsl::CompiledExpr>(
                compile_text(spec.exact[c], time_only, "exact[" + std::to_string(c) + "]")));
        }
        sys.exact = [programs](double t) {
            std::vector<double> out;
            out.reserve(programs.size());
            const double slot[1] = {t};
            for (const auto& p : programs) {
                out.push_back((*p)(slot));
            }
            return out;
        };
    }
    for (std::size_t c = 0; c < spec.initial_iterate.size(); ++c) {
        auto program = std::make_shared<const dsl::CompiledExpr>(compile_text(
            spec.initial_iterate[c], time_only, "initial_iterate[" + std::to_string(c) + "]"));
        problem.initial_iterate.push_back([program](double t) {
            const double slot[1] = {t};
            return (*program)(slot);
        });
    }
    validate(sys);
    return problem;
}

Problem resolve_problem(const std::string& source)
{
    if (is_builtin(source)) {
        return compile_problem(builtin_spec(source));
    }
    std::error_code ec;
    if (!std::filesystem::exists(source, ec)) {
        throw Error(ErrorKind::UnknownProblem,
                    "'" + source + "' is neither a built-in problem (ex1, ex2, ex3) nor an existing file");
    }
    return compile_problem(load_problem_file(source));
}

}  // namespace ivim
