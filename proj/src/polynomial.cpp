#include "prepmark/polynomial.hpp"

#include <algorithm>
#include <set>

#include "prepmark/error.hpp"

namespace prepmark {

unsigned total_degree(const Monomial& m) {
  unsigned d = 0;
  for (const auto& [_, e] : m) d += e;
  return d;
}

namespace {

Monomial multiply(const Monomial& a, const Monomial& b) {
  Monomial out;
  out.reserve(a.size() + b.size());
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() || j != b.end()) {
    if (j == b.end() || (i != a.end() && i->first < j->first)) {
      out.push_back(*i++);
    } else if (i == a.end() || j->first < i->first) {
      out.push_back(*j++);
    } else {
      out.emplace_back(i->first, i->second + j->second);
      ++i;
      ++j;
    }
  }
  return out;
}

[[noreturn]] void not_polynomial(const std::string& why) {
  throw Error(errc::kNotAPolynomial, "not a polynomial: " + why);
}

}  // namespace

Polynomial Polynomial::constant(const Rational& c) {
  Polynomial p;
  p.add_term({}, c);
  return p;
}

Polynomial Polynomial::variable(const std::string& name) {
  Polynomial p;
  p.add_term({{name, 1u}}, Rational(1));
  return p;
}

Polynomial Polynomial::from_terms(const Terms& terms) {
  Polynomial p;
  for (const auto& [m, c] : terms) {
    Monomial clean;
    for (const auto& [v, e] : m) {
      if (e > 0) clean.emplace_back(v, e);
    }
    std::sort(clean.begin(), clean.end());
    p.add_term(clean, c);
  }
  return p;
}

void Polynomial::add_term(const Monomial& m, const Rational& c) {
  if (c == 0) return;
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
}

bool Polynomial::is_constant() const {
  return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty());
}

Rational Polynomial::constant_term() const {
  auto it = terms_.find(Monomial{});
  return it == terms_.end() ? Rational(0) : it->second;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  Polynomial r = *this;
  for (const auto& [m, c] : o.terms_) r.add_term(m, c);
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const { return *this + (-o); }

Polynomial Polynomial::operator-() const { return scaled(Rational(-1)); }

Polynomial Polynomial::scaled(const Rational& factor) const {
  Polynomial r;
  if (factor == 0) return r;
  for (const auto& [m, c] : terms_) r.terms_.emplace(m, c * factor);
  return r;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
  Polynomial r;
  for (const auto& [ma, ca] : terms_) {
    for (const auto& [mb, cb] : o.terms_) r.add_term(multiply(ma, mb), ca * cb);
  }
  return r;
}

Polynomial Polynomial::pow(unsigned exponent) const {
  Polynomial result = constant(Rational(1));
  Polynomial base = *this;
  while (exponent > 0) {
    if (exponent & 1u) result = result * base;
    exponent >>= 1u;
    if (exponent > 0) base = base * base;
  }
  return result;
}

Expr Polynomial::to_expr() const {
  if (terms_.empty()) return Expr::number(0);

  std::vector<std::pair<Monomial, Rational>> ordered(terms_.begin(), terms_.end());
  std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    return total_degree(a.first) > total_degree(b.first);
  });

  auto coefficient_expr = [](const Rational& magnitude) {
    if (is_integer(magnitude)) return Expr::number(magnitude);
    return Expr::number(Rational(boost::multiprecision::numerator(magnitude))) /
           Expr::number(Rational(boost::multiprecision::denominator(magnitude)));
  };

  std::optional<Expr> sum;
  for (const auto& [m, c] : ordered) {
    const Rational magnitude = abs(c);
    std::optional<Expr> term;
    if (m.empty() || magnitude != 1) term = coefficient_expr(magnitude);
    for (const auto& [v, e] : m) {
      Expr factor = e == 1 ? Expr::variable(v)
                           : prepmark::pow(Expr::variable(v), Expr::number(static_cast<long long>(e)));
      term = term ? *term * factor : factor;
    }
    if (!sum) {
      sum = c < 0 ? -*term : *term;
    } else {
      sum = c < 0 ? *sum - *term : *sum + *term;
    }
  }
  return *sum;
}

Polynomial to_polynomial_nf(const Expr& e) {
  return e.visit(overloaded{
      [](const Number& n) {
        const auto* q = std::get_if<Rational>(&n.value);
        if (!q) not_polynomial("inexact numeric literal");
        return Polynomial::constant(*q);
      },
      [](const Variable& v) { return Polynomial::variable(v.name); },
      [](const Constant& c) -> Polynomial {
        not_polynomial("transcendental constant " + std::string(constant_name(c.which)));
      },
      [](const Call& c) -> Polynomial {
        not_polynomial("function " + std::string(function_name(c.fn)));
      },
      [](const Negate& n) { return -to_polynomial_nf(n.operand); },
      [](const Binary& b) -> Polynomial {
        switch (b.op) {
          case BinaryOp::Add: return to_polynomial_nf(b.lhs) + to_polynomial_nf(b.rhs);
          case BinaryOp::Sub: return to_polynomial_nf(b.lhs) - to_polynomial_nf(b.rhs);
          case BinaryOp::Mul: return to_polynomial_nf(b.lhs) * to_polynomial_nf(b.rhs);
          case BinaryOp::Div: {
            Polynomial den = to_polynomial_nf(b.rhs);
            if (!den.is_constant()) not_polynomial("division by a variable expression");
            if (den.is_zero()) not_polynomial("division by zero");
            return to_polynomial_nf(b.lhs).scaled(1 / den.constant_term());
          }
          case BinaryOp::Pow: {
            Polynomial exponent = to_polynomial_nf(b.rhs);
            if (!exponent.is_constant()) not_polynomial("variable exponent");
            Rational k = exponent.constant_term();
            if (!is_integer(k) || k < 0) not_polynomial("exponent must be a non-negative integer");
            if (k > kMaxPolynomialExponent) not_polynomial("exponent too large");
            return to_polynomial_nf(b.lhs).pow(k.convert_to<unsigned>());
          }
        }
        not_polynomial("unknown operator");
      },
  });
}

namespace {

struct TermShape {
  std::map<std::string, unsigned> signature;
  int coefficients = 0;
  int divisors = 0;
};

bool is_numeric_literal(const Expr& e) {
  if (const auto* n = std::get_if<Negate>(&e.node().value)) return is_numeric_literal(n->operand);
  return std::holds_alternative<Number>(e.node().value);
}

bool collect_factors(const Expr& e, TermShape& shape) {
  return e.visit(overloaded{
      [&](const Number&) {
        ++shape.coefficients;
        return true;
      },
      [&](const Variable& v) {
        shape.signature[v.name] += 1;
        return true;
      },
      [&](const Negate& n) { return collect_factors(n.operand, shape); },
      [&](const Binary& b) {
        switch (b.op) {
          case BinaryOp::Mul:
            return collect_factors(b.lhs, shape) && collect_factors(b.rhs, shape);
          case BinaryOp::Div:
            if (!is_numeric_literal(b.rhs)) return false;
            ++shape.divisors;
            return collect_factors(b.lhs, shape);
          case BinaryOp::Pow: {
            const auto* v = std::get_if<Variable>(&b.lhs.node().value);
            const auto* n = std::get_if<Number>(&b.rhs.node().value);
            if (!v || !n) return false;
            const auto* q = std::get_if<Rational>(&n->value);
            if (!q || !is_integer(*q) || *q < 0 || *q > kMaxPolynomialExponent) return false;
            shape.signature[v->name] += q->convert_to<unsigned>();
            return true;
          }
          default: return false;
        }
      },
      [](const auto&) { return false; },
  });
}

void flatten_sum(const Expr& e, std::vector<Expr>& terms) {
  if (const auto* b = std::get_if<Binary>(&e.node().value)) {
    if (b->op == BinaryOp::Add || b->op == BinaryOp::Sub) {
      flatten_sum(b->lhs, terms);
      flatten_sum(b->rhs, terms);
      return;
    }
  }
  terms.push_back(e);
}

}  // namespace

bool is_expanded_sum_form(const Expr& e) {
  std::vector<Expr> terms;
  flatten_sum(e, terms);
  std::set<std::map<std::string, unsigned>> seen;
  for (const Expr& term : terms) {
    TermShape shape;
    if (!collect_factors(term, shape)) return false;
    if (shape.coefficients > 1 || shape.divisors > 1) return false;
    std::erase_if(shape.signature, [](const auto& kv) { return kv.second == 0; });
    if (!seen.insert(shape.signature).second) return false;
  }
  return true;
}

}  // namespace prepmark
