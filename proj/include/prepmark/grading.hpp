#pragma once

#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "prepmark/equivalence.hpp"
#include "prepmark/expr.hpp"
#include "prepmark/predicate.hpp"

namespace prepmark {

struct GradeOutcome {
  double score = 0.0;  // in [0, 1]
  bool correct = false;  // score == 1
  std::set<std::string> flags;
  std::string feedback_key;
  // Parser diagnostics or similar; never contains the expected answer.
  std::string message;

  friend bool operator==(const GradeOutcome&, const GradeOutcome&) = default;
};

namespace feedback {
inline constexpr const char* kCorrect = "correct";
inline constexpr const char* kIncorrect = "incorrect";
inline constexpr const char* kPartial = "partial";
inline constexpr const char* kParseError = "parse_error";
inline constexpr const char* kMissingConstant = "missing_constant";
inline constexpr const char* kRightValueWrongForm = "right_value_wrong_form";
inline constexpr const char* kManualReview = "manual_review";
inline constexpr const char* kDegeneratePoints = "degenerate_points";
inline constexpr const char* kVerticalLine = "vertical_line";
inline constexpr const char* kOutOfCanvas = "out_of_canvas";
inline constexpr const char* kNonConstantBinding = "non_constant_binding";
inline constexpr const char* kIncompleteResponse = "incomplete_response";
inline constexpr const char* kNoResponse = "no_response";
inline constexpr const char* kInvalidResponse = "invalid_response";
}  // namespace feedback

// --- grader specifications -------------------------------------------------

struct StructuralPolynomialSpec {
  Expr expected;
};

struct EquivalenceSpec {
  Expr expected;
  SamplingConfig sampling;
};

struct AntiderivativeSpec {
  Expr integrand = Expr::number(0);
  std::string var = "x";
  std::string constant_symbol = "C";
  double penalty = 0.1;
  SamplingConfig sampling;
};

struct NumericMultiSpec {
  std::vector<double> accepted;
  double abs_tolerance = 1e-9;
};

enum class ChoiceMode { Single, Multi };

struct ChoiceSpec {
  std::vector<std::string> options;
  std::set<std::string> correct;
  ChoiceMode mode = ChoiceMode::Single;
};

// y = slope * x + intercept
struct Line {
  double slope = 0.0;
  double intercept = 0.0;
};

struct Canvas {
  double x_min = -3.0;
  double x_max = 3.0;
  double y_min = -3.0;
  double y_max = 3.0;
};

struct LineSketchSpec {
  Line target;
  double slope_tol = 0.05;
  double intercept_tol = 0.05;
  Canvas canvas;
};

struct ConstraintSpec {
  Predicate predicate;
};

using GraderSpec = std::variant<StructuralPolynomialSpec, EquivalenceSpec, AntiderivativeSpec,
                                NumericMultiSpec, ChoiceSpec, LineSketchSpec, ConstraintSpec>;

// Throws InvalidSpec when a spec invariant does not hold (penalty outside
// (0,1), non-positive tolerance, correct options not among options, ...).
void validate_spec(const GraderSpec& spec);

// --- submitted responses ---------------------------------------------------

struct ExpressionResponse {
  std::string text;
};
struct NumberResponse {
  std::string text;  // parsed as a constant expression, so "2/3" is accepted
};
struct OptionResponse {
  std::string id;
};
struct OptionSetResponse {
  std::set<std::string> ids;
};
struct Point {
  double x = 0.0;
  double y = 0.0;
};
struct PointPairResponse {
  Point first;
  Point second;
};
struct BindingsResponse {
  std::map<std::string, std::string> values;
};

using SubmittedResponse = std::variant<ExpressionResponse, NumberResponse, OptionResponse,
                                       OptionSetResponse, PointPairResponse, BindingsResponse>;

// --- graders -----------------------------------------------------------------

// Full marks only for a fully expanded sum whose canonical form matches.
GradeOutcome grade_structural_polynomial(const StructuralPolynomialSpec& spec,
                                         const std::string& response);

GradeOutcome grade_equivalence(const EquivalenceSpec& spec, const std::string& response);

// Differentiates the response and compares it with the integrand. A missing
// additive constant costs spec.penalty.
GradeOutcome grade_antiderivative(const AntiderivativeSpec& spec, const std::string& response);

GradeOutcome grade_numeric_multi(const NumericMultiSpec& spec, const std::string& response);
GradeOutcome grade_numeric_multi(const NumericMultiSpec& spec, double response);

// Single mode: 1 iff the chosen id is correct. Multi mode:
// max(0, (hits - wrong picks) / |correct|). Throws UnknownOption.
GradeOutcome grade_choice(const ChoiceSpec& spec, const std::set<std::string>& chosen);

GradeOutcome grade_line_sketch(const LineSketchSpec& spec, Point first, Point second);

GradeOutcome grade_constraint(const ConstraintSpec& spec,
                              const std::map<std::string, std::string>& bindings);

// Dispatches on the spec arm. Throws ArmMismatch when the response arm does
// not belong to the spec arm.
GradeOutcome grade(const GraderSpec& spec, const SubmittedResponse& response);

std::string_view spec_kind_name(const GraderSpec& spec);
std::string_view response_kind_name(const SubmittedResponse& response);

}  // namespace prepmark
