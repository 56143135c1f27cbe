#include "bcstab/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <utility>

namespace bcstab {

enum class Op : unsigned char { Const, Variable, Add, Sub, Mul, Div, Neg, Pow, Sin, Cos, Exp, Ln, Sqrt };

struct ExprNode {
    Op op = Op::Const;
    double value = 0.0;  // literal for Const, exponent for Pow
    Var var = Var::X1;
    std::shared_ptr<const ExprNode> a;
    std::shared_ptr<const ExprNode> b;
    unsigned vars = 0;
};

namespace {

using NodePtr = std::shared_ptr<const ExprNode>;

constexpr std::array<std::string_view, kNumVars> kVarNames = {"x1", "x2", "s", "y", "lam"};

NodePtr make_const(double v)
{
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Const;
    n->value = v;
    return n;
}

NodePtr make_var(Var v)
{
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Variable;
    n->var = v;
    n->vars = 1u << static_cast<unsigned>(v);
    return n;
}

NodePtr make_node(Op op, NodePtr a, NodePtr b = nullptr, double value = 0.0)
{
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->value = value;
    n->vars = a->vars | (b ? b->vars : 0u);
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

bool is_const(const NodePtr& n) { return n->op == Op::Const; }
bool is_const(const NodePtr& n, double v) { return n->op == Op::Const && n->value == v; }

[[noreturn]] void domain_error(const char* what) { throw EvalError(EvalError::Kind::Domain, what); }

double apply_pow(double base, double exponent)
{
    if (base < 0.0 && exponent != std::floor(exponent)) domain_error("non-integer power of a negative number");
    if (base == 0.0 && exponent < 0.0) domain_error("negative power of zero");
    return std::pow(base, exponent);
}

double apply_unary(Op op, double x)
{
    switch (op) {
    case Op::Neg: return -x;
    case Op::Sin: return std::sin(x);
    case Op::Cos: return std::cos(x);
    case Op::Exp: return std::exp(x);
    case Op::Ln:
        if (!(x > 0.0)) domain_error("ln of a non-positive number");
        return std::log(x);
    case Op::Sqrt:
        if (x < 0.0) domain_error("sqrt of a negative number");
        return std::sqrt(x);
    default: break;
    }
    throw std::logic_error("apply_unary: not a unary op");
}

double apply_binary(Op op, double x, double y)
{
    switch (op) {
    case Op::Add: return x + y;
    case Op::Sub: return x - y;
    case Op::Mul: return x * y;
    case Op::Div:
        if (y == 0.0) domain_error("division by zero");
        return x / y;
    default: break;
    }
    throw std::logic_error("apply_binary: not a binary op");
}

double eval_node(const ExprNode& n, const Env& env)
{
    switch (n.op) {
    case Op::Const: return n.value;
    case Op::Variable:
        if (!env.bound(n.var)) {
            throw EvalError(EvalError::Kind::UnboundVariable,
                            "unbound variable '" + std::string(var_name(n.var)) + "'");
        }
        return env[n.var];
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: return apply_binary(n.op, eval_node(*n.a, env), eval_node(*n.b, env));
    case Op::Pow: return apply_pow(eval_node(*n.a, env), n.value);
    default: return apply_unary(n.op, eval_node(*n.a, env));
    }
}

// Folds only when the result is finite and well defined, so domain errors surface at eval time.
bool try_fold(Op op, const NodePtr& a, const NodePtr& b, double exponent, double& out)
{
    if (!is_const(a) || (b && !is_const(b))) return false;
    try {
        const double av = a->value;
        if (op == Op::Pow) out = apply_pow(av, exponent);
        else if (b) out = apply_binary(op, av, b->value);
        else out = apply_unary(op, av);
    } catch (const EvalError&) {
        return false;
    }
    return std::isfinite(out);
}

NodePtr add(NodePtr a, NodePtr b)
{
    double v;
    if (try_fold(Op::Add, a, b, 0, v)) return make_const(v);
    if (is_const(a, 0.0)) return b;
    if (is_const(b, 0.0)) return a;
    return make_node(Op::Add, std::move(a), std::move(b));
}

NodePtr neg(NodePtr a)
{
    double v;
    if (try_fold(Op::Neg, a, nullptr, 0, v)) return make_const(v);
    if (a->op == Op::Neg) return a->a;
    return make_node(Op::Neg, std::move(a));
}

NodePtr sub(NodePtr a, NodePtr b)
{
    double v;
    if (try_fold(Op::Sub, a, b, 0, v)) return make_const(v);
    if (is_const(b, 0.0)) return a;
    if (is_const(a, 0.0)) return neg(std::move(b));
    return make_node(Op::Sub, std::move(a), std::move(b));
}

NodePtr mul(NodePtr a, NodePtr b)
{
    double v;
    if (try_fold(Op::Mul, a, b, 0, v)) return make_const(v);
    if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
    if (is_const(a, 1.0)) return b;
    if (is_const(b, 1.0)) return a;
    if (is_const(a, -1.0)) return neg(std::move(b));
    if (is_const(b, -1.0)) return neg(std::move(a));
    return make_node(Op::Mul, std::move(a), std::move(b));
}

NodePtr div(NodePtr a, NodePtr b)
{
    double v;
    if (try_fold(Op::Div, a, b, 0, v)) return make_const(v);
    if (is_const(b, 1.0)) return a;
    if (is_const(a, 0.0) && !is_const(b, 0.0)) return make_const(0.0);
    return make_node(Op::Div, std::move(a), std::move(b));
}

NodePtr power(NodePtr base, double exponent)
{
    double v;
    if (try_fold(Op::Pow, base, nullptr, exponent, v)) return make_const(v);
    if (exponent == 0.0) return make_const(1.0);
    if (exponent == 1.0) return base;
    return make_node(Op::Pow, std::move(base), nullptr, exponent);
}

NodePtr call(Op op, NodePtr a)
{
    double v;
    if (try_fold(op, a, nullptr, 0, v)) return make_const(v);
    return make_node(op, std::move(a));
}

NodePtr derivative(const NodePtr& n, Var var)
{
    if ((n->vars & (1u << static_cast<unsigned>(var))) == 0) return make_const(0.0);
    switch (n->op) {
    case Op::Const: return make_const(0.0);
    case Op::Variable: return make_const(n->var == var ? 1.0 : 0.0);
    case Op::Add: return add(derivative(n->a, var), derivative(n->b, var));
    case Op::Sub: return sub(derivative(n->a, var), derivative(n->b, var));
    case Op::Mul:
        return add(mul(derivative(n->a, var), n->b), mul(n->a, derivative(n->b, var)));
    case Op::Div:
        // (a/b)' = a'/b - a b' / b^2
        return sub(div(derivative(n->a, var), n->b),
                   div(mul(n->a, derivative(n->b, var)), power(n->b, 2.0)));
    case Op::Neg: return neg(derivative(n->a, var));
    case Op::Pow:
        return mul(mul(make_const(n->value), power(n->a, n->value - 1.0)), derivative(n->a, var));
    case Op::Sin: return mul(call(Op::Cos, n->a), derivative(n->a, var));
    case Op::Cos: return neg(mul(call(Op::Sin, n->a), derivative(n->a, var)));
    case Op::Exp: return mul(n, derivative(n->a, var));
    case Op::Ln: return div(derivative(n->a, var), n->a);
    case Op::Sqrt: return div(derivative(n->a, var), mul(make_const(2.0), n));
    }
    throw std::logic_error("derivative: unhandled op");
}

// ---------------------------------------------------------------------------
// Printing

int precedence(const ExprNode& n)
{
    switch (n.op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    case Op::Const: return n.value < 0.0 ? 3 : 5;
    default: return 5;
    }
}

std::string format_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string print(const ExprNode& n);

std::string wrap(const ExprNode& child, bool parens)
{
    return parens ? "(" + print(child) + ")" : print(child);
}

const char* function_name(Op op)
{
    switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Ln: return "ln";
    case Op::Sqrt: return "sqrt";
    default: return "?";
    }
}

std::string print(const ExprNode& n)
{
    const int p = precedence(n);
    switch (n.op) {
    case Op::Const: return format_number(n.value);
    case Op::Variable: return std::string(var_name(n.var));
    case Op::Add:
    case Op::Mul:
    case Op::Sub:
    case Op::Div: {
        const char* sym = n.op == Op::Add ? " + " : n.op == Op::Sub ? " - " : n.op == Op::Mul ? "*" : "/";
        // Right operand of equal precedence keeps its parentheses so the reparsed tree
        // evaluates in the same floating-point order.
        return wrap(*n.a, precedence(*n.a) < p) + sym + wrap(*n.b, precedence(*n.b) <= p);
    }
    case Op::Neg: return "-" + wrap(*n.a, precedence(*n.a) < 4);
    case Op::Pow: {
        const std::string e = format_number(n.value);
        return wrap(*n.a, precedence(*n.a) <= p) + "^" + (n.value < 0.0 ? "(" + e + ")" : e);
    }
    default: return std::string(function_name(n.op)) + "(" + print(*n.a) + ")";
    }
}

// ---------------------------------------------------------------------------
// Parsing

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    NodePtr parse_all()
    {
        NodePtr e = parse_sum();
        skip_ws();
        if (pos_ != src_.size()) syntax("unexpected character '" + std::string(1, src_[pos_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(ParseError::Kind kind, std::size_t at, const std::string& msg) const
    {
        throw ParseError(kind, at, msg + " at position " + std::to_string(at));
    }
    [[noreturn]] void syntax(const std::string& msg) const { fail(ParseError::Kind::Syntax, pos_, msg); }

    void skip_ws()
    {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c)
    {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c)
    {
        if (!accept(c)) syntax(std::string("expected '") + c + "'");
    }

    NodePtr parse_sum()
    {
        NodePtr lhs = parse_product();
        for (;;) {
            if (accept('+')) lhs = add(lhs, parse_product());
            else if (accept('-')) lhs = sub(lhs, parse_product());
            else return lhs;
        }
    }

    NodePtr parse_product()
    {
        NodePtr lhs = parse_unary();
        for (;;) {
            if (accept('*')) lhs = mul(lhs, parse_unary());
            else if (accept('/')) lhs = div(lhs, parse_unary());
            else return lhs;
        }
    }

    NodePtr parse_unary()
    {
        if (accept('-')) return neg(parse_unary());
        if (accept('+')) return parse_unary();
        return parse_power();
    }

    NodePtr parse_power()
    {
        NodePtr base = parse_primary();
        if (accept('^')) {
            skip_ws();
            const std::size_t at = pos_;
            NodePtr exponent = parse_unary();
            if (!is_const(exponent)) {
                fail(ParseError::Kind::NonSmooth, at, "exponent must be a constant");
            }
            return power(base, exponent->value);
        }
        return base;
    }

    NodePtr parse_primary()
    {
        skip_ws();
        if (pos_ >= src_.size()) syntax("unexpected end of input");
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = parse_sum();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        syntax("unexpected character '" + std::string(1, c) + "'");
    }

    NodePtr parse_number()
    {
        const std::size_t start = pos_;
        auto digits = [&] {
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        };
        digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            digits();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) digits();
            else pos_ = save;
        }
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, v);
        if (ec != std::errc() || ptr != src_.data() + pos_) {
            fail(ParseError::Kind::Syntax, start, "malformed number");
        }
        return make_const(v);
    }

    NodePtr parse_identifier()
    {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
            ++pos_;
        }
        const std::string_view id = src_.substr(start, pos_ - start);

        for (std::size_t i = 0; i < kNumVars; ++i) {
            if (id == kVarNames[i]) return make_var(static_cast<Var>(i));
        }
        if (id == "pi") return make_const(std::numbers::pi);

        static constexpr std::pair<std::string_view, Op> functions[] = {
            {"sin", Op::Sin}, {"cos", Op::Cos}, {"exp", Op::Exp}, {"ln", Op::Ln}, {"sqrt", Op::Sqrt}};
        for (const auto& [name, op] : functions) {
            if (id == name) {
                expect('(');
                NodePtr arg = parse_sum();
                expect(')');
                return call(op, arg);
            }
        }

        static constexpr std::string_view non_smooth[] = {
            "min", "max", "abs", "fabs", "sign", "sgn", "floor", "ceil", "round", "trunc",
            "step", "heaviside", "mod", "fmod", "if", "clip", "clamp"};
        for (auto name : non_smooth) {
            if (id == name) {
                fail(ParseError::Kind::NonSmooth, start,
                     "non-smooth primitive '" + std::string(id) + "' is not allowed");
            }
        }
        fail(ParseError::Kind::UnknownIdentifier, start, "unknown identifier '" + std::string(id) + "'");
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string_view var_name(Var v) noexcept { return kVarNames[static_cast<std::size_t>(v)]; }

ParseError::ParseError(Kind kind, std::size_t position, const std::string& message)
    : std::runtime_error(message), kind_(kind), position_(position)
{
}

EvalError::EvalError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}

Expr::Expr() : node_(make_const(0.0)) {}
Expr::Expr(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}

Expr Expr::constant(double value) { return Expr(make_const(value)); }
Expr Expr::variable(Var v) { return Expr(make_var(v)); }

double Expr::eval(const Env& env) const
{
    const double v = eval_node(*node_, env);
    if (!std::isfinite(v)) domain_error("non-finite result");
    return v;
}

bool Expr::depends_on(Var v) const noexcept { return (node_->vars & (1u << static_cast<unsigned>(v))) != 0; }
unsigned Expr::free_variables() const noexcept { return node_->vars; }
bool Expr::is_constant() const noexcept { return node_->op == Op::Const; }

double Expr::constant_value() const
{
    if (!is_constant()) throw std::logic_error("expression is not constant: " + to_string());
    return node_->value;
}

std::string Expr::to_string() const { return print(*node_); }

Expr parse(std::string_view source) { return Expr(Parser(source).parse_all()); }

Expr diff(const Expr& e, Var var, int order)
{
    if (var != Var::Y && var != Var::Lam) {
        throw std::invalid_argument("diff: variable must be y or lam");
    }
    if (order != 1 && order != 2) throw std::invalid_argument("diff: order must be 1 or 2");
    NodePtr d = derivative(e.shared_node(), var);
    if (order == 2) d = derivative(d, var);
    return Expr(std::move(d));
}

namespace {
const NodePtr& share(const Expr& e) { return e.shared_node(); }
}  // namespace

Expr operator+(const Expr& a, const Expr& b) { return Expr(add(share(a), share(b))); }
Expr operator-(const Expr& a, const Expr& b) { return Expr(sub(share(a), share(b))); }
Expr operator*(const Expr& a, const Expr& b) { return Expr(mul(share(a), share(b))); }
Expr operator/(const Expr& a, const Expr& b) { return Expr(div(share(a), share(b))); }
Expr operator-(const Expr& a) { return Expr(neg(share(a))); }
Expr pow(const Expr& base, double exponent) { return Expr(power(share(base), exponent)); }

}  // namespace bcstab
