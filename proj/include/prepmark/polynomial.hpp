#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "prepmark/expr.hpp"
#include "prepmark/rational.hpp"

namespace prepmark {

// Sorted (variable, exponent) pairs with positive exponents; empty for the
// constant monomial.
using Monomial = std::vector<std::pair<std::string, unsigned>>;

unsigned total_degree(const Monomial& m);

// Canonical expanded form over exact rationals. Zero coefficients are never
// stored, so two polynomials are equal iff their term maps are equal.
class Polynomial {
 public:
  using Terms = std::map<Monomial, Rational>;

  Polynomial() = default;
  static Polynomial constant(const Rational& c);
  static Polynomial variable(const std::string& name);
  static Polynomial from_terms(const Terms& terms);

  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  // Coefficient of the constant monomial (0 when absent).
  Rational constant_term() const;

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator-() const;
  Polynomial scaled(const Rational& factor) const;
  Polynomial pow(unsigned exponent) const;

  friend bool operator==(const Polynomial&, const Polynomial&) = default;

  // Expression tree of the expanded sum, terms ordered by descending total
  // degree then by monomial.
  Expr to_expr() const;

 private:
  void add_term(const Monomial& m, const Rational& c);
  Terms terms_;
};

// Exponents above this are rejected as NotAPolynomial to bound expansion.
inline constexpr unsigned kMaxPolynomialExponent = 64;

// Fully expands e. Throws NotAPolynomial for division by a non-constant,
// non-integer or negative exponents, functions, pi/e, or float literals.
Polynomial to_polynomial_nf(const Expr& e);

/// Structural check used by the expanded-form grader.
///
/// True iff e, flattened over + and -, is a sum of terms where each term is a
/// product of variable factors raised to literal non-negative integer powers
/// and at most one numeric literal coefficient, optionally divided by one
/// numeric literal (3/2*x^2 and 3x^2/2 both qualify), and no two terms share
/// a monomial signature. Any parenthesized sum inside a product
/// or under a power fails the check.
bool is_expanded_sum_form(const Expr& e);

}  // namespace prepmark
