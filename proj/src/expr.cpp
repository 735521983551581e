#include "ivim/expr.hpp"

#include "ivim/error.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <sstream>

namespace ivim::dsl {

struct Expr::Node {
    Kind kind;
    double value = 0.0;
    std::string name;
    Function fn = Function::Sin;
    unsigned root = 0;
    std::vector<Expr> children;
    std::size_t position = 0;
};

namespace {

constexpr std::size_t kMaxNesting = 200;

struct FunctionEntry {
    std::string_view name;
    Function fn;
};

constexpr std::array<FunctionEntry, 9> kFunctions{{
    {"sin", Function::Sin},
    {"cos", Function::Cos},
    {"tan", Function::Tan},
    {"tanh", Function::Tanh},
    {"exp", Function::Exp},
    {"log", Function::Log},
    {"sqrt", Function::Sqrt},
    {"abs", Function::Abs},
    {"nthroot", Function::NthRoot},
}};

std::optional<Function> lookup_function(std::string_view name)
{
    for (const auto& entry : kFunctions) {
        if (entry.name == name) {
            return entry.fn;
        }
    }
    return std::nullopt;
}

std::string format_number(double v)
{
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.17g", v);
    return buf.data();
}

// ---------------------------------------------------------------- semantics

[[noreturn]] void domain_error(const Expr& node, const std::string& detail)
{
    throw Error(ErrorKind::DomainError, "domain error in '" + to_string(node) + "': " + detail,
                node.position());
}

double finite_or_throw(double v, const Expr& node)
{
    if (!std::isfinite(v)) {
        throw Error(ErrorKind::NonFinite, "'" + to_string(node) + "' evaluated to a non-finite value",
                    node.position());
    }
    return v;
}

double apply_call(Function fn, unsigned root, double x, const Expr& node)
{
    switch (fn) {
    case Function::Sin: return std::sin(x);
    case Function::Cos: return std::cos(x);
    case Function::Tan: return std::tan(x);
    case Function::Tanh: return std::tanh(x);
    case Function::Exp: return std::exp(x);
    case Function::Log:
        if (!(x > 0.0)) {
            domain_error(node, "log of nonpositive argument " + format_number(x));
        }
        return std::log(x);
    case Function::Sqrt:
        if (x < 0.0) {
            domain_error(node, "sqrt of negative argument " + format_number(x));
        }
        return std::sqrt(x);
    case Function::Abs: return std::abs(x);
    case Function::NthRoot: {
        if (root % 2 == 0 && x < 0.0) {
            domain_error(node, "even root " + std::to_string(root) + " of negative argument " +
                                   format_number(x));
        }
        const double magnitude = std::pow(std::abs(x), 1.0 / static_cast<double>(root));
        return x < 0.0 ? -magnitude : magnitude;
    }
    }
    return 0.0;
}

double apply_binary(Expr::Kind op, double lhs, double rhs, const Expr& node)
{
    switch (op) {
    case Expr::Kind::Add: return lhs + rhs;
    case Expr::Kind::Sub: return lhs - rhs;
    case Expr::Kind::Mul: return lhs * rhs;
    case Expr::Kind::Div: return lhs / rhs;
    case Expr::Kind::Pow:
        if (lhs < 0.0 && std::trunc(rhs) != rhs) {
            domain_error(node, "negative base " + format_number(lhs) + " with non-integer exponent " +
                                   format_number(rhs));
        }
        return std::pow(lhs, rhs);
    default: return 0.0;
    }
}

// ------------------------------------------------------------------ parser

class Parser {
public:
    explicit Parser(std::span<const Token> tokens) : tokens_(tokens)
    {
        if (!tokens_.empty()) {
            const Token& last = tokens_.back();
            end_ = last.position + last.lexeme.size();
        }
    }

    Expr run()
    {
        if (tokens_.empty()) {
            throw Error(ErrorKind::UnexpectedToken, "empty expression", 0);
        }
        Expr e = expression(1);
        if (pos_ < tokens_.size()) {
            const Token& tok = tokens_[pos_];
            if (tok.lexeme == ")") {
                throw Error(ErrorKind::UnbalancedParen,
                            "unmatched ')' at offset " + std::to_string(tok.position), tok.position);
            }
            throw Error(ErrorKind::TrailingInput,
                        "unexpected trailing input '" + tok.lexeme + "' at offset " +
                            std::to_string(tok.position),
                        tok.position);
        }
        return e;
    }

private:
    static int binary_precedence(const Token& tok)
    {
        if (tok.kind != Token::Kind::Operator) {
            return 0;
        }
        if (tok.lexeme == "+" || tok.lexeme == "-") {
            return 1;
        }
        if (tok.lexeme == "*" || tok.lexeme == "/") {
            return 2;
        }
        return 0;
    }

    const Token* peek() const { return pos_ < tokens_.size() ? &tokens_[pos_] : nullptr; }

    bool peek_is(std::string_view lexeme) const
    {
        const Token* tok = peek();
        return tok && tok->lexeme == lexeme;
    }

    [[noreturn]] void unexpected(std::string_view expected) const
    {
        const Token* tok = peek();
        if (!tok) {
            if (!open_parens_.empty()) {
                throw Error(ErrorKind::UnbalancedParen,
                            "'(' at offset " + std::to_string(open_parens_.back()) + " is never closed",
                            open_parens_.back());
            }
            throw Error(ErrorKind::UnexpectedToken,
                        "unexpected end of input, expected " + std::string(expected), end_);
        }
        throw Error(ErrorKind::UnexpectedToken,
                    "unexpected '" + tok->lexeme + "' at offset " + std::to_string(tok->position) +
                        ", expected " + std::string(expected),
                    tok->position);
    }

    void expect(std::string_view lexeme)
    {
        if (!peek_is(lexeme)) {
            unexpected("'" + std::string(lexeme) + "'");
        }
        ++pos_;
    }

    void enter()
    {
        if (++depth_ > kMaxNesting) {
            const Token* tok = peek();
            const std::size_t at = tok ? tok->position : end_;
            throw Error(ErrorKind::UnexpectedToken, "expression nested too deeply", at);
        }
    }

    Expr expression(int min_prec)
    {
        enter();
        Expr lhs = unary();
        while (const Token* tok = peek()) {
            const int prec = binary_precedence(*tok);
            if (prec == 0 || prec < min_prec) {
                break;
            }
            const char op = tok->lexeme[0];
            const std::size_t at = tok->position;
            ++pos_;
            Expr rhs = expression(prec + 1);
            const Expr::Kind kind = op == '+'   ? Expr::Kind::Add
                                    : op == '-' ? Expr::Kind::Sub
                                    : op == '*' ? Expr::Kind::Mul
                                                : Expr::Kind::Div;
            lhs = Expr::binary(kind, std::move(lhs), std::move(rhs), at);
        }
        --depth_;
        return lhs;
    }

    Expr unary()
    {
        if (peek_is("-")) {
            enter();
            const std::size_t at = tokens_[pos_++].position;
            Expr operand = unary();
            --depth_;
            return Expr::negate(std::move(operand), at);
        }
        return power();
    }

    Expr power()
    {
        Expr base = primary();
        if (peek_is("^")) {
            enter();
            const std::size_t at = tokens_[pos_++].position;
            Expr exponent = unary();
            --depth_;
            return Expr::binary(Expr::Kind::Pow, std::move(base), std::move(exponent), at);
        }
        return base;
    }

    Expr primary()
    {
        const Token* tok = peek();
        if (!tok) {
            unexpected("a number, name or '('");
        }
        switch (tok->kind) {
        case Token::Kind::Number: {
            ++pos_;
            double v = 0.0;
            const char* last = tok->lexeme.data() + tok->lexeme.size();
            const auto [ptr, ec] = std::from_chars(tok->lexeme.data(), last, v);
            if (ec != std::errc{} || ptr != last || !std::isfinite(v)) {
                throw Error(ErrorKind::UnexpectedToken,
                            "number '" + tok->lexeme + "' is not representable", tok->position);
            }
            return Expr::constant(v, {}, tok->position);
        }
        case Token::Kind::Identifier: return identifier();
        case Token::Kind::Paren:
            if (tok->lexeme == "(") {
                open_parens_.push_back(tok->position);
                ++pos_;
                Expr inner = expression(1);
                expect(")");
                open_parens_.pop_back();
                return inner;
            }
            break;
        default: break;
        }
        unexpected("a number, name or '('");
    }

    Expr identifier()
    {
        const Token& tok = tokens_[pos_++];
        if (auto fn = lookup_function(tok.lexeme)) {
            if (!peek_is("(")) {
                unexpected("'(' after function '" + tok.lexeme + "'");
            }
            open_parens_.push_back(tokens_[pos_].position);
            ++pos_;
            Expr arg = expression(1);
            unsigned root = 0;
            if (*fn == Function::NthRoot) {
                expect(",");
                root = root_literal();
            }
            expect(")");
            open_parens_.pop_back();
            return Expr::call(*fn, std::move(arg), root, tok.position);
        }
        if (tok.lexeme == "pi") {
            return Expr::constant(std::numbers::pi, "pi", tok.position);
        }
        if (tok.lexeme == "e") {
            return Expr::constant(std::numbers::e, "e", tok.position);
        }
        return Expr::variable(tok.lexeme, tok.position);
    }

    unsigned root_literal()
    {
        const Token* tok = peek();
        if (!tok || tok->kind != Token::Kind::Number) {
            unexpected("a positive integer root index");
        }
        unsigned root = 0;
        const char* first = tok->lexeme.data();
        const char* last = first + tok->lexeme.size();
        const auto [ptr, ec] = std::from_chars(first, last, root);
        if (ec != std::errc{} || ptr != last || root == 0) {
            throw Error(ErrorKind::UnexpectedToken,
                        "nthroot index must be a positive integer literal, got '" + tok->lexeme + "'",
                        tok->position);
        }
        ++pos_;
        return root;
    }

    std::span<const Token> tokens_;
    std::size_t pos_ = 0;
    std::size_t end_ = 0;
    std::size_t depth_ = 0;
    std::vector<std::size_t> open_parens_;
};

// ------------------------------------------------------------------ printer

int print_precedence(const Expr& e)
{
    switch (e.kind()) {
    case Expr::Kind::Add:
    case Expr::Kind::Sub: return 1;
    case Expr::Kind::Mul:
    case Expr::Kind::Div: return 2;
    case Expr::Kind::Negate: return 3;
    case Expr::Kind::Pow: return 4;
    default: return 5;
    }
}

void print(const Expr& e, std::ostream& out);

void print_child(const Expr& child, bool parens, std::ostream& out)
{
    if (parens) {
        out << '(';
    }
    print(child, out);
    if (parens) {
        out << ')';
    }
}

void print(const Expr& e, std::ostream& out)
{
    const auto kids = e.children();
    switch (e.kind()) {
    case Expr::Kind::Constant:
        out << (e.name().empty() ? format_number(e.value()) : e.name());
        return;
    case Expr::Kind::Variable: out << e.name(); return;
    case Expr::Kind::Negate:
        out << '-';
        print_child(kids[0], print_precedence(kids[0]) < 3, out);
        return;
    case Expr::Kind::Pow:
        print_child(kids[0], print_precedence(kids[0]) <= 4, out);
        out << '^';
        print_child(kids[1], print_precedence(kids[1]) < 3, out);
        return;
    case Expr::Kind::Call:
        out << function_name(e.function()) << '(';
        print(kids[0], out);
        if (e.function() == Function::NthRoot) {
            out << ", " << e.root();
        }
        out << ')';
        return;
    default: {
        const int prec = print_precedence(e);
        const char* op = e.kind() == Expr::Kind::Add   ? " + "
                         : e.kind() == Expr::Kind::Sub ? " - "
                         : e.kind() == Expr::Kind::Mul ? "*"
                                                       : "/";
        print_child(kids[0], print_precedence(kids[0]) < prec, out);
        out << op;
        print_child(kids[1], print_precedence(kids[1]) <= prec, out);
        return;
    }
    }
}

void collect_variables(const Expr& e, std::vector<VariableUse>& out)
{
    if (e.kind() == Expr::Kind::Variable) {
        out.push_back({e.name(), e.position()});
    }
    for (const auto& child : e.children()) {
        collect_variables(child, out);
    }
}

double evaluate(const Expr& e, const Environment& env)
{
    const auto kids = e.children();
    double v = 0.0;
    switch (e.kind()) {
    case Expr::Kind::Constant: return e.value();
    case Expr::Kind::Variable: {
        const auto it = env.find(e.name());
        if (it == env.end()) {
            throw Error(ErrorKind::UnboundVariable, "variable '" + e.name() + "' is not bound",
                        e.position());
        }
        v = it->second;
        break;
    }
    case Expr::Kind::Negate: v = -evaluate(kids[0], env); break;
    case Expr::Kind::Call: v = apply_call(e.function(), e.root(), evaluate(kids[0], env), e); break;
    default: {
        const double lhs = evaluate(kids[0], env);
        const double rhs = evaluate(kids[1], env);
        v = apply_binary(e.kind(), lhs, rhs, e);
        break;
    }
    }
    return finite_or_throw(v, e);
}

}  // namespace

// -------------------------------------------------------------------- Expr

Expr Expr::constant(double value, std::string spelling, std::size_t position)
{
    return Expr(std::make_shared<const Node>(
        Node{Kind::Constant, value, std::move(spelling), Function::Sin, 0, {}, position}));
}

Expr Expr::variable(std::string name, std::size_t position)
{
    return Expr(std::make_shared<const Node>(
        Node{Kind::Variable, 0.0, std::move(name), Function::Sin, 0, {}, position}));
}

Expr Expr::negate(Expr operand, std::size_t position)
{
    return Expr(std::make_shared<const Node>(
        Node{Kind::Negate, 0.0, {}, Function::Sin, 0, {std::move(operand)}, position}));
}

Expr Expr::binary(Kind op, Expr lhs, Expr rhs, std::size_t position)
{
    if (op != Kind::Add && op != Kind::Sub && op != Kind::Mul && op != Kind::Div && op != Kind::Pow) {
        throw Error(ErrorKind::InvalidProblem, "not a binary operator");
    }
    return Expr(std::make_shared<const Node>(
        Node{op, 0.0, {}, Function::Sin, 0, {std::move(lhs), std::move(rhs)}, position}));
}

Expr Expr::call(Function fn, Expr arg, unsigned root, std::size_t position)
{
    if (fn == Function::NthRoot && root == 0) {
        throw Error(ErrorKind::InvalidProblem, "nthroot needs a positive root index", position);
    }
    return Expr(std::make_shared<const Node>(
        Node{Kind::Call, 0.0, {}, fn, fn == Function::NthRoot ? root : 0u, {std::move(arg)}, position}));
}

Expr::Kind Expr::kind() const noexcept { return node_->kind; }
double Expr::value() const noexcept { return node_->value; }
const std::string& Expr::name() const noexcept { return node_->name; }
Function Expr::function() const noexcept { return node_->fn; }
unsigned Expr::root() const noexcept { return node_->root; }
std::span<const Expr> Expr::children() const noexcept { return node_->children; }
std::size_t Expr::position() const noexcept { return node_->position; }

bool operator==(const Expr& lhs, const Expr& rhs)
{
    if (lhs.node_ == rhs.node_) {
        return true;
    }
    const Expr::Node& a = *lhs.node_;
    const Expr::Node& b = *rhs.node_;
    if (a.kind != b.kind || a.children.size() != b.children.size()) {
        return false;
    }
    switch (a.kind) {
    case Expr::Kind::Constant:
        if (a.value != b.value || a.name != b.name) {
            return false;
        }
        break;
    case Expr::Kind::Variable:
        if (a.name != b.name) {
            return false;
        }
        break;
    case Expr::Kind::Call:
        if (a.fn != b.fn || a.root != b.root) {
            return false;
        }
        break;
    default: break;
    }
    for (std::size_t i = 0; i < a.children.size(); ++i) {
        if (!(a.children[i] == b.children[i])) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------- lexing

std::vector<Token> tokenize(std::string_view src)
{
    std::vector<Token> out;
    std::size_t i = 0;
    const auto digit = [&](std::size_t at) {
        return at < src.size() && std::isdigit(static_cast<unsigned char>(src[at]));
    };
    while (i < src.size()) {
        const char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        if (digit(i) || (c == '.' && digit(i + 1))) {
            while (digit(i)) {
                ++i;
            }
            if (i < src.size() && src[i] == '.') {
                ++i;
                while (digit(i)) {
                    ++i;
                }
            }
            if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
                std::size_t j = i + 1;
                if (j < src.size() && (src[j] == '+' || src[j] == '-')) {
                    ++j;
                }
                if (digit(j)) {
                    i = j;
                    while (digit(i)) {
                        ++i;
                    }
                }
            }
            if (i < src.size() && src[i] == '.') {
                throw Error(ErrorKind::IllegalCharacter,
                            "illegal character '.' at offset " + std::to_string(i), i);
            }
            out.push_back({Token::Kind::Number, std::string(src.substr(start, i - start)), start});
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (i < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) {
                ++i;
            }
            out.push_back({Token::Kind::Identifier, std::string(src.substr(start, i - start)), start});
            continue;
        }
        switch (c) {
        case '+':
        case '-':
        case '*':
        case '/':
        case '^': out.push_back({Token::Kind::Operator, std::string(1, c), start}); break;
        case '(':
        case ')': out.push_back({Token::Kind::Paren, std::string(1, c), start}); break;
        case ',': out.push_back({Token::Kind::Comma, ",", start}); break;
        default: {
            std::string shown = std::isprint(static_cast<unsigned char>(c))
                                    ? std::string(1, c)
                                    : "\\x" + std::to_string(static_cast<unsigned char>(c));
            throw Error(ErrorKind::IllegalCharacter,
                        "illegal character '" + shown + "' at offset " + std::to_string(i), i);
        }
        }
        ++i;
    }
    return out;
}

Expr parse_expression(std::span<const Token> tokens) { return Parser(tokens).run(); }

Expr parse(std::string_view src)
{
    const auto tokens = tokenize(src);
    return parse_expression(tokens);
}

double eval_expr(const Expr& e, const Environment& env) { return evaluate(e, env); }

std::vector<VariableUse> free_variables(const Expr& e)
{
    std::vector<VariableUse> out;
    collect_variables(e, out);
    return out;
}

void validate_vars(const Expr& e, const std::set<std::string, std::less<>>& allowed)
{
    std::string message;
    std::optional<std::size_t> first;
    for (const auto& use : free_variables(e)) {
        if (allowed.count(use.name) == 0) {
            message += (message.empty() ? "unknown variable " : ", ") + ("'" + use.name + "' at offset ") +
                       std::to_string(use.position);
            if (!first) {
                first = use.position;
            }
        }
    }
    if (first) {
        throw Error(ErrorKind::UnknownVariable, message, first);
    }
}

std::string to_string(const Expr& e)
{
    std::ostringstream out;
    print(e, out);
    return out.str();
}

const char* function_name(Function fn)
{
    for (const auto& entry : kFunctions) {
        if (entry.fn == fn) {
            return entry.name.data();
        }
    }
    return "?";
}

// ------------------------------------------------------------ CompiledExpr

CompiledExpr::CompiledExpr(const Expr& e, const std::map<std::string, std::size_t, std::less<>>& aliases)
{
    std::size_t depth = 0;
    const auto emit = [&](auto&& self, const Expr& node) -> void {
        for (const auto& child : node.children()) {
            self(self, child);
        }
        Instruction ins{node.kind(), node.value(), 0, node.function(), node.root(), node};
        if (node.kind() == Expr::Kind::Variable) {
            const auto it = aliases.find(node.name());
            if (it == aliases.end()) {
                throw Error(ErrorKind::UnboundVariable, "variable '" + node.name() + "' is not bound",
                            node.position());
            }
            ins.slot = it->second;
            slot_count_ = std::max(slot_count_, it->second + 1);
        }
        if (node.kind() == Expr::Kind::Constant || node.kind() == Expr::Kind::Variable) {
            max_depth_ = std::max(max_depth_, ++depth);
        } else if (node.children().size() == 2) {
            --depth;
        }
        program_.push_back(std::move(ins));
    };
    emit(emit, e);
}

double CompiledExpr::operator()(std::span<const double> slots) const
{
    if (slots.size() < slot_count_) {
        throw Error(ErrorKind::ShapeMismatch, "compiled expression needs " + std::to_string(slot_count_) +
                                                  " variable slots");
    }
    std::vector<double> stack;
    stack.reserve(max_depth_);
    for (const auto& ins : program_) {
        double v = 0.0;
        switch (ins.kind) {
        case Expr::Kind::Constant: stack.push_back(ins.value); continue;
        case Expr::Kind::Variable: v = slots[ins.slot]; break;
        case Expr::Kind::Negate: v = -stack.back(); stack.pop_back(); break;
        case Expr::Kind::Call: {
            const double x = stack.back();
            stack.pop_back();
            v = apply_call(ins.fn, ins.root, x, ins.node);
            break;
        }
        default: {
            const double rhs = stack.back();
            stack.pop_back();
            const double lhs = stack.back();
            stack.pop_back();
            v = apply_binary(ins.kind, lhs, rhs, ins.node);
            break;
        }
        }
        stack.push_back(finite_or_throw(v, ins.node));
    }
    return stack.back();
}

}  // namespace ivim::dsl
