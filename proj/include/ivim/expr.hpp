#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ivim::dsl {

struct Token {
    enum class Kind { Number, Identifier, Operator, Paren, Comma };

    Kind kind;
    std::string lexeme;
    std::size_t position;  // byte offset into the source
};

enum class Function { Sin, Cos, Tan, Tanh, Exp, Log, Sqrt, Abs, NthRoot };

/**
 * Immutable expression tree. Nodes are shared, so copies are cheap.
 *
 * Grammar, loosest to tightest: `+ -` < `* /` < unary `-` < `^` (right
 * associative) < calls and parentheses. `-u^2` is `-(u^2)`.
 */
class Expr {
public:
    enum class Kind { Constant, Variable, Negate, Add, Sub, Mul, Div, Pow, Call };

    static Expr constant(double value, std::string spelling = {}, std::size_t position = 0);
    static Expr variable(std::string name, std::size_t position = 0);
    static Expr negate(Expr operand, std::size_t position = 0);
    static Expr binary(Kind op, Expr lhs, Expr rhs, std::size_t position = 0);
    static Expr call(Function fn, Expr arg, unsigned root = 0, std::size_t position = 0);

    Kind kind() const noexcept;
    double value() const noexcept;
    /// Variable name, or the spelling of a named constant (pi, e).
    const std::string& name() const noexcept;
    Function function() const noexcept;
    /// Root index of nthroot; 0 for other calls.
    unsigned root() const noexcept;
    std::span<const Expr> children() const noexcept;
    std::size_t position() const noexcept;

    /// Structural equality; positions are ignored.
    friend bool operator==(const Expr& lhs, const Expr& rhs);

private:
    struct Node;
    explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

std::vector<Token> tokenize(std::string_view src);
Expr parse_expression(std::span<const Token> tokens);
/// tokenize + parse_expression.
Expr parse(std::string_view src);

using Environment = std::map<std::string, double, std::less<>>;

double eval_expr(const Expr& e, const Environment& env);

struct VariableUse {
    std::string name;
    std::size_t position;
};

/// Every variable occurrence, in source order.
std::vector<VariableUse> free_variables(const Expr& e);

/// Throws UnknownVariable listing every variable not in `allowed`.
void validate_vars(const Expr& e, const std::set<std::string, std::less<>>& allowed);

/// Minimal-parenthesis rendering that parses back to the same tree.
std::string to_string(const Expr& e);

const char* function_name(Function fn);

/**
 * Expression flattened to a postfix program with variables resolved to slots,
 * for repeated evaluation in inner loops. Results are identical to eval_expr.
 */
class CompiledExpr {
public:
    /// `aliases` maps each variable name to a slot index of the argument span.
    CompiledExpr(const Expr& e, const std::map<std::string, std::size_t, std::less<>>& aliases);

    double operator()(std::span<const double> slots) const;

private:
    struct Instruction {
        Expr::Kind kind;
        double value = 0.0;
        std::size_t slot = 0;
        Function fn = Function::Sin;
        unsigned root = 0;
        Expr node;  // for error messages
    };

    std::vector<Instruction> program_;
    std::size_t max_depth_ = 0;
    std::size_t slot_count_ = 0;
};

}  // namespace ivim::dsl
