#include "prepmark/error.hpp"
#include "prepmark/expr.hpp"

namespace prepmark {
namespace {

bool is_number(const Expr& e, long long value) {
  const auto* n = std::get_if<Number>(&e.node().value);
  if (!n) return false;
  if (const auto* q = std::get_if<Rational>(&n->value)) return *q == value;
  return std::get<double>(n->value) == static_cast<double>(value);
}

Expr zero() { return Expr::number(0); }
Expr one() { return Expr::number(1); }

Expr add(Expr a, Expr b) {
  if (is_number(a, 0)) return b;
  if (is_number(b, 0)) return a;
  return a + b;
}

Expr sub(Expr a, Expr b) {
  if (is_number(b, 0)) return a;
  if (is_number(a, 0)) return -b;
  return a - b;
}

Expr mul(Expr a, Expr b) {
  if (is_number(a, 0) || is_number(b, 0)) return zero();
  if (is_number(a, 1)) return b;
  if (is_number(b, 1)) return a;
  return a * b;
}

Expr div(Expr a, Expr b) {
  if (is_number(a, 0)) return zero();
  if (is_number(b, 1)) return a;
  return a / b;
}

Expr neg(Expr a) {
  if (is_number(a, 0)) return zero();
  return -a;
}

bool depends_on(const Expr& e, std::string_view var) {
  return free_variables(e).contains(std::string(var));
}

Expr minus_one(const Expr& exponent) {
  if (const auto* n = std::get_if<Number>(&exponent.node().value)) {
    if (const auto* q = std::get_if<Rational>(&n->value)) return Expr::number(Rational(*q - 1));
  }
  return exponent - one();
}

Expr derive(const Expr& e, std::string_view var) {
  return e.visit(overloaded{
      [](const Number&) { return zero(); },
      [](const Constant&) { return zero(); },
      [&](const Variable& v) { return v.name == var ? one() : zero(); },
      [&](const Negate& n) { return neg(derive(n.operand, var)); },
      [&](const Binary& b) -> Expr {
        const Expr& u = b.lhs;
        const Expr& v = b.rhs;
        switch (b.op) {
          case BinaryOp::Add: return add(derive(u, var), derive(v, var));
          case BinaryOp::Sub: return sub(derive(u, var), derive(v, var));
          case BinaryOp::Mul:
            return add(mul(derive(u, var), v), mul(u, derive(v, var)));
          case BinaryOp::Div:
            return div(sub(mul(derive(u, var), v), mul(u, derive(v, var))),
                       pow(v, Expr::number(2)));
          case BinaryOp::Pow: {
            const bool base_varies = depends_on(u, var);
            const bool exponent_varies = depends_on(v, var);
            if (!base_varies && !exponent_varies) return zero();
            if (!exponent_varies) {
              // d(u^n) = n u^(n-1) u'
              return mul(mul(v, pow(u, minus_one(v))), derive(u, var));
            }
            if (!base_varies) {
              // d(a^v) = a^v ln(a) v'
              const auto* c = std::get_if<Constant>(&u.node().value);
              Expr log_base = (c && c->which == NamedConstant::E)
                                  ? one()
                                  : Expr::call(Function::Ln, u);
              return mul(mul(e, log_base), derive(v, var));
            }
            // d(u^v) = u^v (v' ln u + v u'/u)
            return mul(e, add(mul(derive(v, var), Expr::call(Function::Ln, u)),
                              div(mul(v, derive(u, var)), u)));
          }
        }
        return zero();
      },
      [&](const Call& c) -> Expr {
        const Expr& u = c.argument;
        if (!depends_on(u, var)) return zero();
        Expr du = derive(u, var);
        switch (c.fn) {
          case Function::Sin: return mul(Expr::call(Function::Cos, u), du);
          case Function::Cos: return mul(neg(Expr::call(Function::Sin, u)), du);
          case Function::Tan:
            return div(du, pow(Expr::call(Function::Cos, u), Expr::number(2)));
          case Function::Ln: return div(du, u);
          case Function::Exp: return mul(e, du);
          case Function::Abs:
            throw Error(errc::kUnsupportedNode,
                        "abs() cannot be differentiated (undefined at 0)");
        }
        return zero();
      },
  });
}

}  // namespace

Expr differentiate(const Expr& e, std::string_view var) { return derive(e, var); }

}  // namespace prepmark
