#include "prepmark/grading.hpp"

#include <algorithm>
#include <cmath>

#include "prepmark/error.hpp"
#include "prepmark/polynomial.hpp"

namespace prepmark {
namespace {

GradeOutcome outcome(double score, std::string key) {
  GradeOutcome o;
  o.score = std::clamp(score, 0.0, 1.0);
  o.correct = o.score == 1.0;
  o.feedback_key = std::move(key);
  return o;
}

GradeOutcome correct_outcome() { return outcome(1.0, feedback::kCorrect); }
GradeOutcome wrong_outcome() { return outcome(0.0, feedback::kIncorrect); }

GradeOutcome flagged(const char* flag, std::string message = {}) {
  GradeOutcome o = outcome(0.0, flag);
  o.flags.insert(flag);
  o.message = std::move(message);
  return o;
}

GradeOutcome parse_error(const SyntaxError& err) {
  GradeOutcome o = outcome(0.0, feedback::kParseError);
  o.message = err.what();
  return o;
}

[[noreturn]] void invalid_spec(const std::string& what) { throw Error(errc::kInvalidSpec, what); }

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

bool has_additive_symbol(const Expr& e, const std::string& symbol) {
  std::vector<Expr> terms;
  flatten_sum(e, terms);
  return std::any_of(terms.begin(), terms.end(), [&](const Expr& t) {
    const Expr* node = &t;
    while (const auto* n = std::get_if<Negate>(&node->node().value)) node = &n->operand;
    const auto* v = std::get_if<Variable>(&node->node().value);
    return v && v->name == symbol;
  });
}

// Parses a variable-free expression to a value. nullopt with `out` filled
// when the text is not a usable constant.
std::optional<Scalar> constant_value(const std::string& text, GradeOutcome& out) {
  try {
    Expr e = parse(text);
    if (!free_variables(e).empty()) {
      out = flagged(feedback::kNonConstantBinding, "enter a number, not an expression in variables");
      return std::nullopt;
    }
    return evaluate_scalar(e, {});
  } catch (const SyntaxError& err) {
    out = parse_error(err);
  } catch (const Error& err) {
    out = flagged(feedback::kInvalidResponse, err.what());
  }
  return std::nullopt;
}

}  // namespace

void validate_spec(const GraderSpec& spec) {
  std::visit(
      overloaded{
          [](const StructuralPolynomialSpec& s) {
            try {
              (void)to_polynomial_nf(s.expected);
            } catch (const Error& err) {
              invalid_spec(std::string("structural_poly expected answer: ") + err.what());
            }
          },
          [](const EquivalenceSpec& s) { s.sampling.validate(); },
          [](const AntiderivativeSpec& s) {
            if (!(s.penalty > 0 && s.penalty < 1)) invalid_spec("penalty must lie in (0, 1)");
            if (s.var.empty()) invalid_spec("antiderivative variable missing");
            if (s.constant_symbol.empty()) invalid_spec("constant symbol missing");
            if (s.constant_symbol == s.var) invalid_spec("constant symbol equals the variable");
            s.sampling.validate();
          },
          [](const NumericMultiSpec& s) {
            if (s.accepted.empty()) invalid_spec("numeric_multi needs at least one accepted value");
            for (double a : s.accepted) {
              if (!std::isfinite(a)) invalid_spec("accepted values must be finite");
            }
            if (!(s.abs_tolerance > 0)) invalid_spec("abs_tolerance must be positive");
          },
          [](const ChoiceSpec& s) {
            if (s.options.empty()) invalid_spec("choice needs options");
            std::set<std::string> unique(s.options.begin(), s.options.end());
            if (unique.size() != s.options.size()) invalid_spec("duplicate option ids");
            if (s.correct.empty()) invalid_spec("choice needs at least one correct option");
            for (const auto& c : s.correct) {
              if (!unique.contains(c)) invalid_spec("correct option '" + c + "' is not an option");
            }
            if (s.mode == ChoiceMode::Single && s.correct.size() != 1) {
              invalid_spec("single choice needs exactly one correct option");
            }
          },
          [](const LineSketchSpec& s) {
            if (!std::isfinite(s.target.slope) || !std::isfinite(s.target.intercept)) {
              invalid_spec("line must be finite");
            }
            if (!(s.slope_tol > 0) || !(s.intercept_tol > 0)) invalid_spec("tolerances must be positive");
            if (!(s.canvas.x_min < s.canvas.x_max) || !(s.canvas.y_min < s.canvas.y_max)) {
              invalid_spec("empty canvas");
            }
          },
          [](const ConstraintSpec& s) {
            if (s.predicate.variables().empty()) invalid_spec("constraint references no variables");
          },
      },
      spec);
}

GradeOutcome grade_structural_polynomial(const StructuralPolynomialSpec& spec,
                                         const std::string& response) {
  Expr submitted = Expr::number(0);
  try {
    submitted = parse(response);
  } catch (const SyntaxError& err) {
    return parse_error(err);
  }
  const Polynomial target = to_polynomial_nf(spec.expected);
  Polynomial value;
  try {
    value = to_polynomial_nf(submitted);
  } catch (const Error&) {
    return wrong_outcome();
  }
  if (value != target) return wrong_outcome();
  if (!is_expanded_sum_form(submitted)) return flagged(feedback::kRightValueWrongForm);
  return correct_outcome();
}

GradeOutcome grade_equivalence(const EquivalenceSpec& spec, const std::string& response) {
  try {
    Expr submitted = parse(response);
    return equivalent(submitted, spec.expected, spec.sampling) ? correct_outcome()
                                                                : wrong_outcome();
  } catch (const SyntaxError& err) {
    return parse_error(err);
  } catch (const Error& err) {
    if (err.code() == errc::kInsufficientSamples) return flagged(feedback::kManualReview, err.what());
    throw;
  }
}

GradeOutcome grade_antiderivative(const AntiderivativeSpec& spec, const std::string& response) {
  Expr antiderivative = Expr::number(0);
  try {
    antiderivative = parse(response);
  } catch (const SyntaxError& err) {
    return parse_error(err);
  }
  try {
    const Expr derivative = differentiate(antiderivative, spec.var);
    if (!equivalent(derivative, spec.integrand, spec.sampling)) return wrong_outcome();
  } catch (const Error& err) {
    if (err.code() == errc::kInsufficientSamples || err.code() == errc::kUnsupportedNode) {
      return flagged(feedback::kManualReview, err.what());
    }
    throw;
  }
  if (!has_additive_symbol(antiderivative, spec.constant_symbol)) {
    GradeOutcome o = outcome(1.0 - spec.penalty, feedback::kMissingConstant);
    o.flags.insert(feedback::kMissingConstant);
    return o;
  }
  return correct_outcome();
}

GradeOutcome grade_numeric_multi(const NumericMultiSpec& spec, double response) {
  if (!std::isfinite(response)) return flagged(feedback::kInvalidResponse);
  for (double a : spec.accepted) {
    if (std::fabs(response - a) <= spec.abs_tolerance) return correct_outcome();
  }
  return wrong_outcome();
}

GradeOutcome grade_numeric_multi(const NumericMultiSpec& spec, const std::string& response) {
  GradeOutcome failure;
  auto value = constant_value(response, failure);
  if (!value) {
    if (failure.feedback_key == feedback::kNonConstantBinding) {
      failure.feedback_key = feedback::kParseError;
    }
    return failure;
  }
  return grade_numeric_multi(spec, to_double(*value));
}

GradeOutcome grade_choice(const ChoiceSpec& spec, const std::set<std::string>& chosen) {
  for (const auto& id : chosen) {
    if (std::find(spec.options.begin(), spec.options.end(), id) == spec.options.end()) {
      throw Error(errc::kUnknownOption, "unknown option '" + id + "'");
    }
  }
  if (spec.mode == ChoiceMode::Single) {
    if (chosen.size() != 1) {
      throw Error(errc::kInvalidArgument, "a drop-down answer selects exactly one option");
    }
    return spec.correct.contains(*chosen.begin()) ? correct_outcome() : wrong_outcome();
  }
  long hits = 0;
  long misses = 0;
  for (const auto& id : chosen) (spec.correct.contains(id) ? hits : misses) += 1;
  const double score =
      std::max(0.0, static_cast<double>(hits - misses) / static_cast<double>(spec.correct.size()));
  if (score == 1.0) return correct_outcome();
  return outcome(score, score > 0 ? feedback::kPartial : feedback::kIncorrect);
}

GradeOutcome grade_line_sketch(const LineSketchSpec& spec, Point first, Point second) {
  constexpr double kCoincident = 1e-9;
  const Canvas& c = spec.canvas;
  for (const Point& p : {first, second}) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x < c.x_min || p.x > c.x_max ||
        p.y < c.y_min || p.y > c.y_max) {
      return flagged(feedback::kOutOfCanvas);
    }
  }
  const double dx = second.x - first.x;
  const double dy = second.y - first.y;
  if (std::fabs(dx) < kCoincident && std::fabs(dy) < kCoincident) {
    return flagged(feedback::kDegeneratePoints);
  }
  if (std::fabs(dx) < kCoincident) return flagged(feedback::kVerticalLine);
  const double slope = dy / dx;
  const double intercept = first.y - slope * first.x;
  if (std::fabs(slope - spec.target.slope) <= spec.slope_tol &&
      std::fabs(intercept - spec.target.intercept) <= spec.intercept_tol) {
    return correct_outcome();
  }
  return wrong_outcome();
}

GradeOutcome grade_constraint(const ConstraintSpec& spec,
                              const std::map<std::string, std::string>& bindings) {
  const auto& needed = spec.predicate.variables();
  for (const auto& name : needed) {
    if (!bindings.contains(name)) {
      return flagged(feedback::kIncompleteResponse, "a value for " + name + " is required");
    }
  }
  ExactBindings values;
  for (const auto& [name, text] : bindings) {
    if (!needed.contains(name)) {
      return flagged(feedback::kInvalidResponse, "unexpected value for " + name);
    }
    GradeOutcome failure;
    auto v = constant_value(text, failure);
    if (!v) return failure;
    values.emplace(name, *v);
  }
  try {
    return spec.predicate.evaluate(values) ? correct_outcome() : wrong_outcome();
  } catch (const Error& err) {
    if (err.code() == errc::kNonFiniteResult) return wrong_outcome();
    throw;
  }
}

namespace {

template <class Arm>
const Arm& require_arm(const GraderSpec& spec, const SubmittedResponse& response) {
  const auto* arm = std::get_if<Arm>(&response);
  if (!arm) {
    throw Error(errc::kArmMismatch, std::string("a ") + std::string(spec_kind_name(spec)) +
                                        " part cannot grade a " +
                                        std::string(response_kind_name(response)) + " response");
  }
  return *arm;
}

}  // namespace

GradeOutcome grade(const GraderSpec& spec, const SubmittedResponse& response) {
  return std::visit(
      overloaded{
          [&](const StructuralPolynomialSpec& s) {
            return grade_structural_polynomial(s, require_arm<ExpressionResponse>(spec, response).text);
          },
          [&](const EquivalenceSpec& s) {
            return grade_equivalence(s, require_arm<ExpressionResponse>(spec, response).text);
          },
          [&](const AntiderivativeSpec& s) {
            return grade_antiderivative(s, require_arm<ExpressionResponse>(spec, response).text);
          },
          [&](const NumericMultiSpec& s) {
            return grade_numeric_multi(s, require_arm<NumberResponse>(spec, response).text);
          },
          [&](const ChoiceSpec& s) {
            if (s.mode == ChoiceMode::Single) {
              return grade_choice(s, {require_arm<OptionResponse>(spec, response).id});
            }
            return grade_choice(s, require_arm<OptionSetResponse>(spec, response).ids);
          },
          [&](const LineSketchSpec& s) {
            const auto& pts = require_arm<PointPairResponse>(spec, response);
            return grade_line_sketch(s, pts.first, pts.second);
          },
          [&](const ConstraintSpec& s) {
            return grade_constraint(s, require_arm<BindingsResponse>(spec, response).values);
          },
      },
      spec);
}

std::string_view spec_kind_name(const GraderSpec& spec) {
  return std::visit(overloaded{
                        [](const StructuralPolynomialSpec&) { return "structural_poly"; },
                        [](const EquivalenceSpec&) { return "equivalence"; },
                        [](const AntiderivativeSpec&) { return "antiderivative"; },
                        [](const NumericMultiSpec&) { return "numeric_multi"; },
                        [](const ChoiceSpec& c) {
                          return c.mode == ChoiceMode::Single ? "choice_single" : "choice_multi";
                        },
                        [](const LineSketchSpec&) { return "line_sketch"; },
                        [](const ConstraintSpec&) { return "constraint"; },
                    },
                    spec);
}

std::string_view response_kind_name(const SubmittedResponse& response) {
  return std::visit(overloaded{
                        [](const ExpressionResponse&) { return "expression"; },
                        [](const NumberResponse&) { return "number"; },
                        [](const OptionResponse&) { return "option"; },
                        [](const OptionSetResponse&) { return "option set"; },
                        [](const PointPairResponse&) { return "point pair"; },
                        [](const BindingsResponse&) { return "bindings"; },
                    },
                    response);
}

}  // namespace prepmark
