#include <array>
#include <cmath>
#include <map>
#include <numbers>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "prepmark/equivalence.hpp"
#include "prepmark/error.hpp"
#include "prepmark/expr.hpp"
#include "prepmark/polynomial.hpp"

namespace prepmark {
namespace {

Expr x() { return Expr::variable("x"); }

std::string error_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

// ---- parse -----------------------------------------------------------------

TEST(Parse, ExpandedQuarticHasFiveTermsWithImplicitProducts) {
  Expr e = parse("a^4-4a^3+6a^2-4a+1");
  Expr a = Expr::variable("a");
  auto n = [](long long v) { return Expr::number(v); };
  Expr expected = pow(a, n(4)) - n(4) * pow(a, n(3)) + n(6) * pow(a, n(2)) - n(4) * a + n(1);
  EXPECT_EQ(e, expected);
}

TEST(Parse, SingleVariable) { EXPECT_EQ(parse("x"), x()); }

TEST(Parse, PowerIsRightAssociative) {
  Expr e = parse("2^3^2");
  EXPECT_EQ(e, pow(Expr::number(2), pow(Expr::number(3), Expr::number(2))));
  EXPECT_DOUBLE_EQ(evaluate(e, {}), 512.0);
}

TEST(Parse, UnaryMinusBindsLooserThanPower) {
  EXPECT_EQ(parse("-a^2"), -pow(Expr::variable("a"), Expr::number(2)));
  EXPECT_DOUBLE_EQ(evaluate(parse("-2^2"), {}), -4.0);
}

TEST(Parse, AdjacencyBindsTighterThanDivision) {
  // 1/2x is 1/(2x)
  EXPECT_EQ(parse("1/2x"), Expr::number(1) / (Expr::number(2) * x()));
  EXPECT_EQ(parse("4a^3"), Expr::number(4) * pow(Expr::variable("a"), Expr::number(3)));
  EXPECT_EQ(parse("(x+1)(x-2)"), (x() + Expr::number(1)) * (x() - Expr::number(2)));
  EXPECT_EQ(parse("ab"), Expr::variable("a") * Expr::variable("b"));
}

TEST(Parse, FunctionsConstantsAndSqrt) {
  EXPECT_EQ(parse("e^(5x)"), pow(Expr::constant(NamedConstant::E), Expr::number(5) * x()));
  EXPECT_EQ(parse("cos(2x)"), Expr::call(Function::Cos, Expr::number(2) * x()));
  EXPECT_EQ(parse("sqrt(x)"), pow(x(), Expr::number(1) / Expr::number(2)));
  EXPECT_EQ(parse("2pi"), Expr::number(2) * Expr::constant(NamedConstant::Pi));
  EXPECT_EQ(parse("3sin(x)"), Expr::number(3) * Expr::call(Function::Sin, x()));
}

TEST(Parse, UnicodeMinusAndDecimals) {
  EXPECT_EQ(parse("x−1"), x() - Expr::number(1));
  EXPECT_EQ(parse("0.25x"), Expr::number(Rational(1, 4)) * x());
  EXPECT_EQ(parse(".5"), Expr::number(Rational(1, 2)));
}

TEST(Parse, SyntaxErrorsCarryOffsets) {
  try {
    parse("(a-1");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.offset(), 4u);
    EXPECT_NE(std::string(e.what()).find("expected ')'"), std::string::npos);
  }
  try {
    parse("3x + * 2");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.offset(), 5u);
  }
  // offsets count characters, not UTF-8 bytes
  try {
    parse("x−−)");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.offset(), 3u);
  }
  EXPECT_EQ(error_code([] { parse(""); }), errc::kSyntax);
  EXPECT_EQ(error_code([] { parse("sin x"); }), errc::kSyntax);
  EXPECT_EQ(error_code([] { parse("x 2"); }), errc::kSyntax);
  EXPECT_EQ(error_code([] { parse("0.3333..."); }), errc::kSyntax);
  EXPECT_EQ(error_code([] { parse(std::string(5000, 'x')); }), errc::kSyntax);
}

TEST(Parse, RenderRoundTripOnRandomTrees) {
  testing::ExprGenerator gen(20240601);
  for (int i = 0; i < 3000; ++i) {
    Expr e = gen.any(5);
    const std::string text = render(e);
    ASSERT_EQ(parse(text), e) << text;
  }
}

// ---- evaluate --------------------------------------------------------------

TEST(Evaluate, Basics) {
  EXPECT_DOUBLE_EQ(evaluate(parse("x+1"), {{"x", 2.0}}), 3.0);
  EXPECT_NEAR(evaluate(parse("cos(2x)"), {{"x", std::numbers::pi / 2}}), -1.0, 1e-12);
}

TEST(Evaluate, PoleAndDomainErrorsAreNonFinite) {
  EXPECT_EQ(error_code([] { evaluate(parse("4/x"), {{"x", 0.0}}); }), errc::kNonFiniteResult);
  EXPECT_EQ(error_code([] { evaluate(parse("ln(x)"), {{"x", -1.0}}); }), errc::kNonFiniteResult);
  EXPECT_EQ(error_code([] { evaluate(parse("e^(x)"), {{"x", 1000.0}}); }), errc::kNonFiniteResult);
  EXPECT_EQ(error_code([] { evaluate(parse("sqrt(x)"), {{"x", -4.0}}); }), errc::kNonFiniteResult);
}

TEST(Evaluate, UnboundVariable) {
  EXPECT_EQ(error_code([] { evaluate(parse("x+y"), {{"x", 1.0}}); }), errc::kUnboundVariable);
}

TEST(Evaluate, RationalSubtreesStayExact) {
  Scalar v = evaluate_scalar(parse("1/3 + 1/6"), {});
  ASSERT_TRUE(std::holds_alternative<Rational>(v));
  EXPECT_EQ(std::get<Rational>(v), Rational(1, 2));
  Scalar w = evaluate_scalar(parse("(2/3)^-2"), {});
  EXPECT_EQ(std::get<Rational>(w), Rational(9, 4));
  EXPECT_TRUE(std::holds_alternative<double>(evaluate_scalar(parse("sqrt(2)"), {})));
}

// ---- differentiate -----------------------------------------------------------

// Independent oracle: central difference with step 1e-6.
double central_difference(const Expr& f, double at) {
  constexpr double h = 1e-6;
  return (evaluate(f, {{"x", at + h}}) - evaluate(f, {{"x", at - h}})) / (2 * h);
}

bool matches_finite_difference(const Expr& f, double at) {
  const double symbolic = evaluate(differentiate(f, "x"), {{"x", at}});
  const double numeric = central_difference(f, at);
  return std::fabs(symbolic - numeric) <= 1e-5 * std::max(1.0, std::fabs(symbolic));
}

TEST(Differentiate, TextbookCases) {
  EXPECT_TRUE(equivalent(differentiate(parse("x^2"), "x"), parse("2x")));
  EXPECT_TRUE(equivalent(differentiate(parse("e^(5x)"), "x"), parse("5e^(5x)")));
  EXPECT_TRUE(equivalent(differentiate(parse("ln(x)"), "x"), parse("1/x")));
  EXPECT_TRUE(equivalent(differentiate(parse("tan(x)"), "x"), parse("1/cos(x)^2")));
  EXPECT_TRUE(equivalent(differentiate(parse("x^x"), "x"),
                         parse("x^x*(ln(x)+1)"), {.domain = {0.1, 4.0}}));
  EXPECT_TRUE(equivalent(differentiate(parse("sqrt(x)"), "x"), parse("1/(2sqrt(x))"),
                         {.domain = {0.1, 4.0}}));
  EXPECT_EQ(differentiate(parse("y^2"), "x"), Expr::number(0));
}

TEST(Differentiate, QuarticOverEightAgainstFiniteDifferences) {
  const Expr f = parse("(2x-1)^4/8");
  const Expr d = differentiate(f, "x");
  EXPECT_TRUE(equivalent(d, parse("(2x-1)^3")));
  for (double at : {-1.7, -0.4, 0.3, 1.1, 2.6}) {
    EXPECT_TRUE(matches_finite_difference(f, at)) << at;
    EXPECT_NEAR(central_difference(f, at), std::pow(2 * at - 1, 3),
                1e-5 * std::max(1.0, std::fabs(std::pow(2 * at - 1, 3))));
  }
}

TEST(Differentiate, AbsIsRejected) {
  EXPECT_EQ(error_code([] { differentiate(parse("abs(x)"), "x"); }), errc::kUnsupportedNode);
  EXPECT_EQ(differentiate(parse("abs(y)"), "x"), Expr::number(0));
}

TEST(Differentiate, AgreesWithFiniteDifferencesOnRandomExpressions) {
  testing::ExprGenerator gen(777);
  int checked = 0;
  for (int i = 0; i < 500; ++i) {
    const Expr f = gen.smooth(4);
    int points = 0;
    for (int attempt = 0; points < 5 && attempt < 50; ++attempt) {
      const double at = gen.real(-2.0, 2.0);
      double value = 0;
      try {
        value = evaluate(f, {{"x", at}});
        (void)central_difference(f, at);
      } catch (const Error&) {
        continue;
      }
      if (std::fabs(value) > 1e6) continue;
      ASSERT_TRUE(matches_finite_difference(f, at)) << render(f) << " at " << at;
      ++points;
    }
    EXPECT_EQ(points, 5) << render(f);
    ++checked;
  }
  EXPECT_EQ(checked, 500);
}

// ---- polynomial normal form ---------------------------------------------

using Exponents = std::array<int, 3>;
using BruteTerms = std::map<Exponents, long long>;

// Term-by-term product, the oracle for the normal form of p*q.
BruteTerms brute_multiply(const BruteTerms& p, const BruteTerms& q) {
  BruteTerms out;
  for (const auto& [ep, cp] : p) {
    for (const auto& [eq, cq] : q) {
      Exponents e{ep[0] + eq[0], ep[1] + eq[1], ep[2] + eq[2]};
      out[e] += cp * cq;
    }
  }
  std::erase_if(out, [](const auto& kv) { return kv.second == 0; });
  return out;
}

Polynomial from_brute(const BruteTerms& terms) {
  static const std::array<std::string, 3> names{"x", "y", "z"};
  Polynomial::Terms t;
  for (const auto& [e, c] : terms) {
    Monomial m;
    for (std::size_t k = 0; k < 3; ++k) {
      if (e[k] > 0) m.emplace_back(names[k], static_cast<unsigned>(e[k]));
    }
    t[m] += Rational(c);
  }
  return Polynomial::from_terms(t);
}

Expr brute_to_expr(const BruteTerms& terms) {
  static const std::array<std::string, 3> names{"x", "y", "z"};
  Expr sum = Expr::number(0);
  for (const auto& [e, c] : terms) {
    Expr term = Expr::number(c);
    for (std::size_t k = 0; k < 3; ++k) {
      if (e[k] > 0) term = term * pow(Expr::variable(names[k]), Expr::number(e[k]));
    }
    sum = sum + term;
  }
  return sum;
}

TEST(PolynomialNF, BinomialFromExampleA) {
  Polynomial p = to_polynomial_nf(parse("(a-1)^4"));
  auto a = [](unsigned k) { return Monomial{{"a", k}}; };
  Polynomial::Terms expected{{a(4), 1}, {a(3), -4}, {a(2), 6}, {a(1), -4}, {Monomial{}, 1}};
  EXPECT_EQ(p.terms(), expected);
}

TEST(PolynomialNF, ZeroAndTwoVariableSquare) {
  EXPECT_TRUE(to_polynomial_nf(parse("x-x")).is_zero());
  Polynomial p = to_polynomial_nf(parse("(x+y)^2"));
  Polynomial::Terms expected{
      {{{"x", 2}}, 1}, {{{"x", 1}, {"y", 1}}, 2}, {{{"y", 2}}, 1}};
  EXPECT_EQ(p.terms(), expected);
}

TEST(PolynomialNF, RejectsNonPolynomials) {
  for (const char* text : {"1/x", "x^(1/2)", "sqrt(x)", "x^-1", "sin(x)", "e^x", "pi*x", "x^y"}) {
    EXPECT_EQ(error_code([&] { to_polynomial_nf(parse(text)); }), errc::kNotAPolynomial) << text;
  }
  EXPECT_EQ(to_polynomial_nf(parse("x/2")), to_polynomial_nf(parse("0.5x")));
}

TEST(PolynomialNF, ProductsMatchBruteForceOracle) {
  testing::ExprGenerator gen(4242);
  auto random_poly = [&] {
    BruteTerms t;
    const int nvars = gen.uniform(1, 3);
    const int nterms = gen.uniform(1, 5);
    for (int i = 0; i < nterms; ++i) {
      Exponents e{0, 0, 0};
      int budget = gen.uniform(0, 6);
      for (int k = 0; k < nvars && budget > 0; ++k) {
        e[static_cast<std::size_t>(k)] = gen.uniform(0, budget);
        budget -= e[static_cast<std::size_t>(k)];
      }
      t[e] += gen.uniform(-9, 9);
    }
    std::erase_if(t, [](const auto& kv) { return kv.second == 0; });
    return t;
  };
  for (int i = 0; i < 1000; ++i) {
    BruteTerms p = random_poly();
    BruteTerms q = random_poly();
    Polynomial nf = to_polynomial_nf(brute_to_expr(p) * brute_to_expr(q));
    ASSERT_EQ(nf, from_brute(brute_multiply(p, q)));
  }
}

// ---- expanded form --------------------------------------------------------

TEST(ExpandedForm, Examples) {
  EXPECT_TRUE(is_expanded_sum_form(parse("a^4-4a^3+6a^2-4a+1")));
  EXPECT_FALSE(is_expanded_sum_form(parse("(a-1)^4")));
  EXPECT_FALSE(is_expanded_sum_form(parse("3x+2x")));
  EXPECT_FALSE(is_expanded_sum_form(parse("(a-1)*(a-1)^3")));
  EXPECT_FALSE(is_expanded_sum_form(parse("2(x+1)")));
  EXPECT_FALSE(is_expanded_sum_form(parse("2*3x")));
  EXPECT_FALSE(is_expanded_sum_form(parse("1+2")));
  EXPECT_TRUE(is_expanded_sum_form(parse("-4a^3+a^4")));
  EXPECT_TRUE(is_expanded_sum_form(parse("3/2*x^2+x")));
  EXPECT_TRUE(is_expanded_sum_form(parse("x^2/2-3")));
  EXPECT_TRUE(is_expanded_sum_form(parse("2xy+y^2")));
  EXPECT_FALSE(is_expanded_sum_form(parse("xy+yx")));
}

TEST(ExpandedForm, RenderedNormalFormsAreExpandedAndPowersOfSumsAreNot) {
  testing::ExprGenerator gen(99);
  for (int i = 0; i < 300; ++i) {
    Expr a = gen.any(2);
    Expr b = gen.any(2);
    Expr sum = a + b;
    EXPECT_FALSE(is_expanded_sum_form(pow(sum, Expr::number(gen.uniform(2, 4)))));
    EXPECT_FALSE(is_expanded_sum_form(x() + pow(sum, Expr::number(2))));
  }
  for (int i = 0; i < 300; ++i) {
    Polynomial p = to_polynomial_nf(parse("(x-" + std::to_string(gen.uniform(1, 9)) + ")^" +
                                          std::to_string(gen.uniform(1, 6)) + "*(y+" +
                                          std::to_string(gen.uniform(1, 5)) + "/3)"));
    Expr rendered = parse(render(p.to_expr()));
    EXPECT_TRUE(is_expanded_sum_form(rendered)) << render(p.to_expr());
    EXPECT_EQ(to_polynomial_nf(rendered), p);
  }
}

// ---- equivalence ------------------------------------------------------------

TEST(Equivalence, Examples) {
  EXPECT_TRUE(equivalent(parse("(sin(x))^2+(cos(x))^2"), parse("1")));
  EXPECT_FALSE(equivalent(x(), parse("x+10^(-6)")));
  EXPECT_TRUE(equivalent(parse("(1/2)sin(2x)"), parse("sin(x)cos(x)")));
  EXPECT_TRUE(equivalent(parse("4/x"), parse("4x^-1")));
}

TEST(Equivalence, PoleCandidatesKeepSamplesAwayFromZero) {
  auto poles = pole_candidates(parse("4/x + 1/(2x-1) + ln(x^2-4)"));
  ASSERT_TRUE(poles.contains("x"));
  std::vector<double> roots = poles["x"];
  std::sort(roots.begin(), roots.end());
  ASSERT_EQ(roots.size(), 4u);
  EXPECT_DOUBLE_EQ(roots[0], -2.0);
  EXPECT_DOUBLE_EQ(roots[1], 0.0);
  EXPECT_DOUBLE_EQ(roots[2], 0.5);
  EXPECT_DOUBLE_EQ(roots[3], 2.0);
  // a zero resample budget still succeeds because no draw lands on the pole
  SamplingConfig cfg;
  cfg.max_resamples = 0;
  EXPECT_TRUE(equivalent(parse("4/x"), parse("8/(2x)"), cfg));
}

TEST(Equivalence, InsufficientSamplesWhenNothingIsDefined) {
  EXPECT_EQ(error_code([] { equivalent(parse("ln(-x^2-1)"), parse("0")); }),
            errc::kInsufficientSamples);
}

TEST(Equivalence, ReflexiveSymmetricDeterministic) {
  testing::ExprGenerator gen(5);
  for (int i = 0; i < 200; ++i) {
    Expr a = gen.smooth(3);
    Expr b = gen.smooth(3);
    SamplingConfig cfg;
    cfg.rng_seed = static_cast<std::uint64_t>(i);
    EXPECT_TRUE(equivalent(a, a, cfg));
    EXPECT_EQ(equivalent(a, b, cfg), equivalent(b, a, cfg));
    EXPECT_EQ(equivalent(a, b, cfg), equivalent(a, b, cfg));
  }
}

TEST(Equivalence, ConfigValidation) {
  SamplingConfig cfg;
  cfg.point_count = 3;
  EXPECT_EQ(error_code([&] { equivalent(x(), x(), cfg); }), errc::kInvalidSpec);
  cfg.point_count = 8;
  cfg.relative_tolerance = 0;
  EXPECT_EQ(error_code([&] { equivalent(x(), x(), cfg); }), errc::kInvalidSpec);
}

}  // namespace
}  // namespace prepmark
