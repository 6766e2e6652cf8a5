#include <cmath>
#include <numbers>

#include "prepmark/error.hpp"
#include "prepmark/expr.hpp"

namespace prepmark {
namespace {

// Exponents beyond this are evaluated in floating point.
constexpr long kMaxExactExponent = 1024;

[[noreturn]] void non_finite(const char* what) {
  throw Error(errc::kNonFiniteResult, std::string("non-finite result: ") + what);
}

double checked(double v, const char* what) {
  if (!std::isfinite(v)) non_finite(what);
  return v;
}

Scalar apply_function(Function fn, double x) {
  switch (fn) {
    case Function::Sin: return checked(std::sin(x), "sin");
    case Function::Cos: return checked(std::cos(x), "cos");
    case Function::Tan: return checked(std::tan(x), "tan");
    case Function::Ln:
      if (x <= 0) non_finite("ln of a non-positive value");
      return checked(std::log(x), "ln");
    case Function::Exp: return checked(std::exp(x), "exp overflow");
    case Function::Abs: return std::fabs(x);
  }
  non_finite("unknown function");
}

Scalar exact_power(const Rational& base, const Rational& exponent) {
  const Integer n = boost::multiprecision::numerator(exponent);
  if (n > kMaxExactExponent || n < -kMaxExactExponent) {
    return checked(std::pow(to_double(base), to_double(exponent)), "power");
  }
  long k = n.convert_to<long>();
  if (base == 0 && k < 0) non_finite("zero to a negative power");
  Rational result = 1;
  Rational b = k < 0 ? Rational(1 / base) : base;
  for (long i = 0, m = k < 0 ? -k : k; i < m; ++i) result *= b;
  return result;
}

Scalar combine(BinaryOp op, const Scalar& a, const Scalar& b) {
  const auto* qa = std::get_if<Rational>(&a);
  const auto* qb = std::get_if<Rational>(&b);
  if (qa && qb) {
    switch (op) {
      case BinaryOp::Add: return Rational(*qa + *qb);
      case BinaryOp::Sub: return Rational(*qa - *qb);
      case BinaryOp::Mul: return Rational(*qa * *qb);
      case BinaryOp::Div:
        if (*qb == 0) non_finite("division by zero");
        return Rational(*qa / *qb);
      case BinaryOp::Pow:
        if (is_integer(*qb)) return exact_power(*qa, *qb);
        break;
    }
  }
  const double x = to_double(a);
  const double y = to_double(b);
  switch (op) {
    case BinaryOp::Add: return checked(x + y, "overflow");
    case BinaryOp::Sub: return checked(x - y, "overflow");
    case BinaryOp::Mul: return checked(x * y, "overflow");
    case BinaryOp::Div:
      if (y == 0) non_finite("division by zero");
      return checked(x / y, "overflow");
    case BinaryOp::Pow:
      if (x == 0 && y < 0) non_finite("zero to a negative power");
      return checked(std::pow(x, y), "power");
  }
  non_finite("unknown operator");
}

Scalar eval(const Expr& e, const ExactBindings& bindings) {
  return e.visit(overloaded{
      [](const Number& n) -> Scalar { return n.value; },
      [&](const Variable& v) -> Scalar {
        auto it = bindings.find(v.name);
        if (it == bindings.end()) {
          throw Error(errc::kUnboundVariable, "unbound variable '" + v.name + "'");
        }
        if (const auto* d = std::get_if<double>(&it->second)) checked(*d, "binding");
        return it->second;
      },
      [](const Constant& c) -> Scalar {
        return c.which == NamedConstant::Pi ? std::numbers::pi : std::numbers::e;
      },
      [&](const Negate& n) -> Scalar {
        Scalar v = eval(n.operand, bindings);
        if (auto* q = std::get_if<Rational>(&v)) return Rational(-*q);
        return -std::get<double>(v);
      },
      [&](const Binary& b) -> Scalar {
        return combine(b.op, eval(b.lhs, bindings), eval(b.rhs, bindings));
      },
      [&](const Call& c) -> Scalar {
        Scalar arg = eval(c.argument, bindings);
        if (c.fn == Function::Abs) {
          if (auto* q = std::get_if<Rational>(&arg)) return Rational(abs(*q));
        }
        return apply_function(c.fn, to_double(arg));
      },
  });
}

}  // namespace

double to_double(const Scalar& s) {
  if (const auto* q = std::get_if<Rational>(&s)) return to_double(*q);
  return std::get<double>(s);
}

Scalar evaluate_scalar(const Expr& e, const ExactBindings& bindings) {
  Scalar v = eval(e, bindings);
  if (const auto* q = std::get_if<Rational>(&v)) {
    if (!std::isfinite(to_double(*q))) non_finite("overflow");
  }
  return v;
}

double evaluate(const Expr& e, const Bindings& bindings) {
  ExactBindings exact;
  for (const auto& [name, value] : bindings) exact.emplace(name, value);
  return checked(to_double(evaluate_scalar(e, exact)), "overflow");
}

}  // namespace prepmark
