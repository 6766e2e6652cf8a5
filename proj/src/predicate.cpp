#include "prepmark/predicate.hpp"

#include <array>
#include <cmath>
#include <variant>
#include <vector>

#include "lexer.hpp"
#include "prepmark/error.hpp"

namespace prepmark {

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge };

struct Predicate::Node {
  struct Compare {
    CompareOp op;
    Expr lhs;
    Expr rhs;
  };
  struct And {
    std::shared_ptr<const Node> a, b;
  };
  struct Or {
    std::shared_ptr<const Node> a, b;
  };
  struct Not {
    std::shared_ptr<const Node> a;
  };
  struct NoSolution {
    std::array<Expr, 6> args;
  };
  std::variant<Compare, And, Or, Not, NoSolution> value;
};

namespace {

using NodePtr = std::shared_ptr<const Predicate::Node>;
using detail::TokenKind;

template <class T>
NodePtr make(T value) {
  return std::make_shared<const Predicate::Node>(Predicate::Node{std::move(value)});
}

class PredicateParser {
 public:
  explicit PredicateParser(std::string_view text)
      : parser_(detail::tokenize(text, {.predicate_words = true})) {}

  NodePtr parse() {
    if (parser_.peek().kind == TokenKind::End) throw SyntaxError(0, "expected a condition");
    NodePtr root = disjunction();
    if (parser_.peek().kind != TokenKind::End) {
      parser_.fail("expected 'and', 'or' or end of input");
    }
    return root;
  }

 private:
  NodePtr disjunction() {
    NodePtr lhs = conjunction();
    while (parser_.accept(TokenKind::Or)) lhs = make(Predicate::Node::Or{lhs, conjunction()});
    return lhs;
  }

  NodePtr conjunction() {
    NodePtr lhs = unary();
    while (parser_.accept(TokenKind::And)) lhs = make(Predicate::Node::And{lhs, unary()});
    return lhs;
  }

  NodePtr unary() {
    if (parser_.accept(TokenKind::Not)) return make(Predicate::Node::Not{unary()});
    if (parser_.peek().kind == TokenKind::Keyword) return builtin();
    if (parser_.peek().kind == TokenKind::LParen) {
      // "(" may open a grouped condition or an arithmetic operand
      const std::size_t mark = parser_.position();
      try {
        parser_.advance();
        NodePtr inner = disjunction();
        parser_.expect(TokenKind::RParen, "expected ')'");
        return inner;
      } catch (const SyntaxError&) {
        parser_.rewind(mark);
      }
    }
    return comparison();
  }

  NodePtr builtin() {
    parser_.advance();
    parser_.expect(TokenKind::LParen, "expected '(' after no_solution_2x2");
    Predicate::Node::NoSolution call{
        {Expr::number(0), Expr::number(0), Expr::number(0), Expr::number(0),
         Expr::number(0), Expr::number(0)}};
    for (std::size_t i = 0; i < 6; ++i) {
      if (i > 0) parser_.expect(TokenKind::Comma, "no_solution_2x2 takes six arguments");
      call.args[i] = parser_.parse_expression();
    }
    parser_.expect(TokenKind::RParen, "expected ')'");
    return make(std::move(call));
  }

  NodePtr comparison() {
    Expr lhs = parser_.parse_expression();
    CompareOp op;
    switch (parser_.peek().kind) {
      case TokenKind::Eq: op = CompareOp::Eq; break;
      case TokenKind::Ne: op = CompareOp::Ne; break;
      case TokenKind::Lt: op = CompareOp::Lt; break;
      case TokenKind::Le: op = CompareOp::Le; break;
      case TokenKind::Gt: op = CompareOp::Gt; break;
      case TokenKind::Ge: op = CompareOp::Ge; break;
      default: parser_.fail("expected a comparison operator");
    }
    parser_.advance();
    Expr rhs = parser_.parse_expression();
    return make(Predicate::Node::Compare{op, std::move(lhs), std::move(rhs)});
  }

  detail::Parser parser_;
};

void collect_variables(const Predicate::Node& n, std::set<std::string>& out) {
  std::visit(overloaded{
                 [&](const Predicate::Node::Compare& c) {
                   out.merge(free_variables(c.lhs));
                   out.merge(free_variables(c.rhs));
                 },
                 [&](const Predicate::Node::And& a) {
                   collect_variables(*a.a, out);
                   collect_variables(*a.b, out);
                 },
                 [&](const Predicate::Node::Or& o) {
                   collect_variables(*o.a, out);
                   collect_variables(*o.b, out);
                 },
                 [&](const Predicate::Node::Not& n) { collect_variables(*n.a, out); },
                 [&](const Predicate::Node::NoSolution& s) {
                   for (const auto& arg : s.args) out.merge(free_variables(arg));
                 },
             },
             n.value);
}

Expr literal(const Scalar& s) {
  if (const auto* q = std::get_if<Rational>(&s)) return Expr::number(*q);
  return Expr::floating(std::get<double>(s));
}

// Sign of a - b: exact for rationals, zero within tolerance for floats.
int compare(const Scalar& a, const Scalar& b) {
  const auto* qa = std::get_if<Rational>(&a);
  const auto* qb = std::get_if<Rational>(&b);
  if (qa && qb) return *qa < *qb ? -1 : (*qa > *qb ? 1 : 0);
  const double d = to_double(a) - to_double(b);
  if (std::fabs(d) <= kPredicateTolerance) return 0;
  return d < 0 ? -1 : 1;
}

bool is_zero(const Scalar& s) { return compare(s, Scalar(Rational(0))) == 0; }

Scalar minor(const Scalar& p, const Scalar& q, const Scalar& r, const Scalar& s) {
  return evaluate_scalar(literal(p) * literal(s) - literal(q) * literal(r), {});
}

bool eval(const Predicate::Node& n, const ExactBindings& bindings) {
  return std::visit(
      overloaded{
          [&](const Predicate::Node::Compare& c) {
            const int sign = compare(evaluate_scalar(c.lhs, bindings),
                                     evaluate_scalar(c.rhs, bindings));
            switch (c.op) {
              case CompareOp::Eq: return sign == 0;
              case CompareOp::Ne: return sign != 0;
              case CompareOp::Lt: return sign < 0;
              case CompareOp::Le: return sign <= 0;
              case CompareOp::Gt: return sign > 0;
              case CompareOp::Ge: return sign >= 0;
            }
            return false;
          },
          [&](const Predicate::Node::And& a) { return eval(*a.a, bindings) && eval(*a.b, bindings); },
          [&](const Predicate::Node::Or& o) { return eval(*o.a, bindings) || eval(*o.b, bindings); },
          [&](const Predicate::Node::Not& x) { return !eval(*x.a, bindings); },
          [&](const Predicate::Node::NoSolution& s) {
            std::array<Scalar, 6> v;
            for (std::size_t i = 0; i < 6; ++i) v[i] = evaluate_scalar(s.args[i], bindings);
            return linear_system_inconsistent(v[0], v[1], v[2], v[3], v[4], v[5]);
          },
      },
      n.value);
}

}  // namespace

Predicate Predicate::parse(std::string_view text) {
  Predicate p;
  p.source_ = std::string(text);
  p.root_ = PredicateParser(text).parse();
  collect_variables(*p.root_, p.variables_);
  return p;
}

bool Predicate::evaluate(const ExactBindings& bindings) const { return eval(*root_, bindings); }

bool linear_system_inconsistent(const Scalar& a1, const Scalar& b1, const Scalar& c1,
                                const Scalar& a2, const Scalar& b2, const Scalar& c2) {
  auto rank = [](std::initializer_list<Scalar> entries, std::initializer_list<Scalar> minors) {
    bool any_minor = false;
    for (const auto& m : minors) any_minor = any_minor || !is_zero(m);
    if (any_minor) return 2;
    for (const auto& e : entries) {
      if (!is_zero(e)) return 1;
    }
    return 0;
  };
  const Scalar det_ab = minor(a1, b1, a2, b2);
  const Scalar det_ac = minor(a1, c1, a2, c2);
  const Scalar det_bc = minor(b1, c1, b2, c2);
  const int rank_a = rank({a1, b1, a2, b2}, {det_ab});
  const int rank_aug = rank({a1, b1, c1, a2, b2, c2}, {det_ab, det_ac, det_bc});
  return rank_a < rank_aug;
}

}  // namespace prepmark
