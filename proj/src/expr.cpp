#include "prepmark/expr.hpp"

#include <cmath>

#include "prepmark/error.hpp"

namespace prepmark {

Expr Expr::number(Rational value) {
  return Expr(std::make_shared<const ExprNode>(ExprNode{Number{std::move(value)}}));
}

Expr Expr::floating(double value) {
  if (!std::isfinite(value)) {
    throw Error(errc::kInvalidArgument, "numeric literal must be finite");
  }
  return Expr(std::make_shared<const ExprNode>(ExprNode{Number{value}}));
}

Expr Expr::variable(std::string name) {
  return Expr(std::make_shared<const ExprNode>(ExprNode{Variable{std::move(name)}}));
}

Expr Expr::constant(NamedConstant which) {
  return Expr(std::make_shared<const ExprNode>(ExprNode{Constant{which}}));
}

Expr Expr::negate(Expr operand) {
  return Expr(std::make_shared<const ExprNode>(ExprNode{Negate{std::move(operand)}}));
}

Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs) {
  return Expr(std::make_shared<const ExprNode>(
      ExprNode{Binary{op, std::move(lhs), std::move(rhs)}}));
}

Expr Expr::call(Function fn, Expr argument) {
  return Expr(std::make_shared<const ExprNode>(ExprNode{Call{fn, std::move(argument)}}));
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  const auto& va = a.node_->value;
  const auto& vb = b.node_->value;
  if (va.index() != vb.index()) return false;
  return std::visit(
      overloaded{
          [&](const Number& n) { return n.value == std::get<Number>(vb).value; },
          [&](const Variable& v) { return v.name == std::get<Variable>(vb).name; },
          [&](const Constant& c) { return c.which == std::get<Constant>(vb).which; },
          [&](const Negate& n) { return n.operand == std::get<Negate>(vb).operand; },
          [&](const Binary& x) {
            const auto& y = std::get<Binary>(vb);
            return x.op == y.op && x.lhs == y.lhs && x.rhs == y.rhs;
          },
          [&](const Call& x) {
            const auto& y = std::get<Call>(vb);
            return x.fn == y.fn && x.argument == y.argument;
          },
      },
      va);
}

std::string_view function_name(Function fn) {
  switch (fn) {
    case Function::Sin: return "sin";
    case Function::Cos: return "cos";
    case Function::Tan: return "tan";
    case Function::Ln: return "ln";
    case Function::Exp: return "exp";
    case Function::Abs: return "abs";
  }
  return "?";
}

std::string_view constant_name(NamedConstant c) {
  return c == NamedConstant::Pi ? "pi" : "e";
}

namespace {

void collect_variables(const Expr& e, std::set<std::string>& out) {
  e.visit(overloaded{
      [](const Number&) {},
      [](const Constant&) {},
      [&](const Variable& v) { out.insert(v.name); },
      [&](const Negate& n) { collect_variables(n.operand, out); },
      [&](const Binary& b) {
        collect_variables(b.lhs, out);
        collect_variables(b.rhs, out);
      },
      [&](const Call& c) { collect_variables(c.argument, out); },
  });
}

}  // namespace

std::set<std::string> free_variables(const Expr& e) {
  std::set<std::string> out;
  collect_variables(e, out);
  return out;
}

std::size_t node_count(const Expr& e) {
  return e.visit(overloaded{
      [](const Negate& n) { return 1 + node_count(n.operand); },
      [](const Binary& b) { return 1 + node_count(b.lhs) + node_count(b.rhs); },
      [](const Call& c) { return 1 + node_count(c.argument); },
      [](const auto&) -> std::size_t { return 1; },
  });
}

}  // namespace prepmark
