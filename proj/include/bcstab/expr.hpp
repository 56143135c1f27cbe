#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bcstab {

/// Free variables an expression may reference.
enum class Var : unsigned char { X1 = 0, X2, S, Y, Lam };

inline constexpr std::size_t kNumVars = 5;

[[nodiscard]] std::string_view var_name(Var v) noexcept;

/// Raised by parse() for malformed input. `position` is a 0-based offset into the source.
class ParseError : public std::runtime_error {
public:
    enum class Kind { Syntax, UnknownIdentifier, NonSmooth };

    ParseError(Kind kind, std::size_t position, const std::string& message);

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] std::size_t position() const noexcept { return position_; }

private:
    Kind kind_;
    std::size_t position_;
};

/// Raised by eval() for unbound variables or evaluation outside the function's domain.
class EvalError : public std::runtime_error {
public:
    enum class Kind { UnboundVariable, Domain };

    EvalError(Kind kind, const std::string& message);

    [[nodiscard]] Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Variable bindings. Unset variables are unbound; reading one from eval() throws.
class Env {
public:
    Env() = default;

    Env& set(Var v, double value) noexcept
    {
        values_[index(v)] = value;
        bound_ |= bit(v);
        return *this;
    }
    Env& x(double x1, double x2) noexcept { return set(Var::X1, x1).set(Var::X2, x2); }
    Env& s(double v) noexcept { return set(Var::S, v); }
    Env& y(double v) noexcept { return set(Var::Y, v); }
    Env& lam(double v) noexcept { return set(Var::Lam, v); }

    [[nodiscard]] bool bound(Var v) const noexcept { return (bound_ & bit(v)) != 0; }
    [[nodiscard]] double operator[](Var v) const noexcept { return values_[index(v)]; }

private:
    static constexpr std::size_t index(Var v) noexcept { return static_cast<std::size_t>(v); }
    static constexpr unsigned bit(Var v) noexcept { return 1u << index(v); }

    double values_[kNumVars] = {};
    unsigned bound_ = 0;
};

struct ExprNode;

/// Immutable expression tree over {x1, x2, s, y, lam}. Copies share structure.
///
/// The grammar only admits C-infinity primitives (sin, cos, exp, ln, sqrt, constant powers),
/// so every expression is twice continuously differentiable wherever it evaluates to a
/// finite value. Non-smooth primitives such as min, max or abs are rejected at parse time.
class Expr {
public:
    /// The constant 0.
    Expr();

    [[nodiscard]] static Expr constant(double value);
    [[nodiscard]] static Expr variable(Var v);

    [[nodiscard]] double eval(const Env& env) const;

    /// True if the expression syntactically references `v`.
    [[nodiscard]] bool depends_on(Var v) const noexcept;
    /// Bitmask of referenced variables, bit i for Var(i).
    [[nodiscard]] unsigned free_variables() const noexcept;

    [[nodiscard]] bool is_constant() const noexcept;
    /// Value of a constant expression; throws std::logic_error otherwise.
    [[nodiscard]] double constant_value() const;

    /// Fully parenthesised where needed; parse(to_string()) evaluates identically.
    [[nodiscard]] std::string to_string() const;

    [[nodiscard]] const ExprNode& node() const noexcept { return *node_; }
    [[nodiscard]] const std::shared_ptr<const ExprNode>& shared_node() const noexcept { return node_; }

    explicit Expr(std::shared_ptr<const ExprNode> node);

private:
    std::shared_ptr<const ExprNode> node_;
};

[[nodiscard]] Expr parse(std::string_view source);

[[nodiscard]] inline double eval(const Expr& e, const Env& env) { return e.eval(env); }

/// Exact symbolic derivative with respect to y or lam. `order` is 1 or 2.
[[nodiscard]] Expr diff(const Expr& e, Var var, int order = 1);

// Builders with constant folding.
[[nodiscard]] Expr operator+(const Expr& a, const Expr& b);
[[nodiscard]] Expr operator-(const Expr& a, const Expr& b);
[[nodiscard]] Expr operator*(const Expr& a, const Expr& b);
[[nodiscard]] Expr operator/(const Expr& a, const Expr& b);
[[nodiscard]] Expr operator-(const Expr& a);
[[nodiscard]] Expr pow(const Expr& base, double exponent);

}  // namespace bcstab
