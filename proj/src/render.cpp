#include <charconv>

#include "prepmark/expr.hpp"

namespace prepmark {
namespace {

// Binding strength of the production a node is rendered as.
enum Level { kSum = 1, kProduct = 2, kFactor = 3, kAtom = 4 };

std::string render_double(double v) {
  char buf[512];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  if (ec != std::errc()) return "0";
  return std::string(buf, end);
}

Level level_of(const Expr& e) {
  return e.visit(overloaded{
      [](const Number& n) {
        if (const auto* q = std::get_if<Rational>(&n.value)) {
          // negative or non-decimal literals render with a sign or slash
          if (*q < 0 || !to_decimal_string(*q)) return kSum;
        } else if (std::get<double>(n.value) < 0) {
          return kSum;
        }
        return kAtom;
      },
      [](const Variable&) { return kAtom; },
      [](const Constant&) { return kAtom; },
      [](const Call&) { return kAtom; },
      [](const Negate&) { return kFactor; },
      [](const Binary& b) {
        switch (b.op) {
          case BinaryOp::Add:
          case BinaryOp::Sub: return kSum;
          case BinaryOp::Mul:
          case BinaryOp::Div: return kProduct;
          case BinaryOp::Pow: return kFactor;
        }
        return kSum;
      },
  });
}

void emit(const Expr& e, std::string& out);

void emit_at_least(const Expr& e, Level min_level, std::string& out) {
  if (level_of(e) < min_level) {
    out.push_back('(');
    emit(e, out);
    out.push_back(')');
  } else {
    emit(e, out);
  }
}

void emit(const Expr& e, std::string& out) {
  e.visit(overloaded{
      [&](const Number& n) {
        if (const auto* q = std::get_if<Rational>(&n.value)) {
          if (auto dec = to_decimal_string(*q)) {
            out += *dec;
          } else {
            out += to_string(*q);
          }
        } else {
          out += render_double(std::get<double>(n.value));
        }
      },
      [&](const Variable& v) { out += v.name; },
      [&](const Constant& c) { out += constant_name(c.which); },
      [&](const Call& c) {
        out += function_name(c.fn);
        out.push_back('(');
        emit(c.argument, out);
        out.push_back(')');
      },
      [&](const Negate& n) {
        out.push_back('-');
        emit_at_least(n.operand, kFactor, out);
      },
      [&](const Binary& b) {
        switch (b.op) {
          case BinaryOp::Add:
          case BinaryOp::Sub:
            emit_at_least(b.lhs, kSum, out);
            out.push_back(b.op == BinaryOp::Add ? '+' : '-');
            emit_at_least(b.rhs, kProduct, out);
            break;
          case BinaryOp::Mul:
          case BinaryOp::Div:
            emit_at_least(b.lhs, kProduct, out);
            out.push_back(b.op == BinaryOp::Mul ? '*' : '/');
            emit_at_least(b.rhs, kFactor, out);
            break;
          case BinaryOp::Pow:
            emit_at_least(b.lhs, kAtom, out);
            out.push_back('^');
            emit_at_least(b.rhs, kFactor, out);
            break;
        }
      },
  });
}

}  // namespace

std::string render(const Expr& e) {
  std::string out;
  emit(e, out);
  return out;
}

}  // namespace prepmark
