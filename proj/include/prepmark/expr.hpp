#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <variant>

#include "prepmark/rational.hpp"

namespace prepmark {

enum class BinaryOp { Add, Sub, Mul, Div, Pow };

// sqrt is not a node: the parser rewrites sqrt(u) as u^(1/2).
enum class Function { Sin, Cos, Tan, Ln, Exp, Abs };

enum class NamedConstant { Pi, E };

struct ExprNode;

// Immutable expression tree. Copies share structure.
class Expr {
 public:
  static Expr number(Rational value);
  static Expr number(long long value) { return number(Rational(value)); }
  static Expr floating(double value);
  static Expr variable(std::string name);
  static Expr constant(NamedConstant which);
  static Expr negate(Expr operand);
  static Expr binary(BinaryOp op, Expr lhs, Expr rhs);
  static Expr call(Function fn, Expr argument);

  const ExprNode& node() const { return *node_; }

  template <class Visitor>
  decltype(auto) visit(Visitor&& visitor) const;

  friend bool operator==(const Expr& a, const Expr& b);

 private:
  explicit Expr(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const ExprNode> node_;
};

// Either an exact rational or, for literals that are not exactly
// representable, a double.
using Scalar = std::variant<Rational, double>;

struct Number {
  Scalar value;
};
struct Variable {
  std::string name;
};
struct Constant {
  NamedConstant which;
};
struct Negate {
  Expr operand;
};
struct Binary {
  BinaryOp op;
  Expr lhs;
  Expr rhs;
};
struct Call {
  Function fn;
  Expr argument;
};

struct ExprNode {
  std::variant<Number, Variable, Constant, Negate, Binary, Call> value;
};

template <class Visitor>
decltype(auto) Expr::visit(Visitor&& visitor) const {
  return std::visit(std::forward<Visitor>(visitor), node_->value);
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline Expr operator+(Expr a, Expr b) { return Expr::binary(BinaryOp::Add, std::move(a), std::move(b)); }
inline Expr operator-(Expr a, Expr b) { return Expr::binary(BinaryOp::Sub, std::move(a), std::move(b)); }
inline Expr operator*(Expr a, Expr b) { return Expr::binary(BinaryOp::Mul, std::move(a), std::move(b)); }
inline Expr operator/(Expr a, Expr b) { return Expr::binary(BinaryOp::Div, std::move(a), std::move(b)); }
inline Expr operator-(Expr a) { return Expr::negate(std::move(a)); }
inline Expr pow(Expr a, Expr b) { return Expr::binary(BinaryOp::Pow, std::move(a), std::move(b)); }

std::string_view function_name(Function fn);
std::string_view constant_name(NamedConstant c);

// Sorted set of variable names appearing in e.
std::set<std::string> free_variables(const Expr& e);

std::size_t node_count(const Expr& e);

/// Parses school-notation input into an Expr.
///
/// Implicit multiplication is accepted ("2x", "4a^3", "(x+1)(x-2)", "ab");
/// it binds tighter than '/' and looser than '^'. '^' is right associative
/// and unary minus binds looser than '^', so "-a^2" is -(a^2). Identifiers
/// are single-letter variables except for the function names sin, cos, tan,
/// ln, exp, sqrt, abs (which must be followed by '(') and the constants pi
/// and e. U+2212 is read as '-'.
///
/// Throws SyntaxError carrying a 0-based character offset.
Expr parse(std::string_view text);

inline constexpr std::size_t kMaxExpressionLength = 4096;

// Text that parse() maps back to a structurally identical tree.
std::string render(const Expr& e);

using Bindings = std::map<std::string, double, std::less<>>;
using ExactBindings = std::map<std::string, Scalar, std::less<>>;

// Evaluates e in double precision. Variable-free rational subtrees are
// computed exactly first. Throws UnboundVariable or NonFiniteResult.
double evaluate(const Expr& e, const Bindings& bindings);

// As evaluate(), but keeps the result exact whenever every operation on the
// path is rational (integer powers included).
Scalar evaluate_scalar(const Expr& e, const ExactBindings& bindings);

double to_double(const Scalar& s);

// Symbolic derivative. Only trivial 0/1 folding is applied to the result.
// Throws UnsupportedNode for abs() of an expression depending on var.
Expr differentiate(const Expr& e, std::string_view var);

}  // namespace prepmark
