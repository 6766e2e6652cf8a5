#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prepmark/grading.hpp"
#include "prepmark/grading_json.hpp"
#include "prepmark/rational.hpp"

namespace prepmark {

enum class Topic { Algebra, Numbers, Geometry, Functions, Calculus, LogicAndSets };
enum class Element { Diagnostic, SelfLearning };

std::string_view topic_name(Topic t);
std::optional<Topic> topic_from_name(std::string_view name);
std::string_view element_name(Element e);

// A parameter drawn from a finite list of exact values, or derived from
// earlier parameters by an expression.
struct ParamSpec {
  std::string name;
  std::vector<Rational> values;
  std::optional<std::string> derived;   // expression with {param} placeholders
  std::vector<std::string> constraints; // predicates with {param} placeholders
};

struct OptionLabel {
  std::string id;
  std::string label;
};

struct PartTemplate {
  std::string prompt;
  std::string kind;
  json spec;          // grader spec fields, strings may hold {param}
  json model_answer;  // a correct response in the wire format, or null
};

struct Feedback {
  std::string on_correct;
  std::string on_wrong;  // hint; never the answer
  std::vector<std::string> links;
};

struct QuestionTemplate {
  std::string id;
  Topic topic = Topic::Algebra;
  Element element = Element::Diagnostic;
  std::string preamble;
  std::string body;
  std::vector<ParamSpec> params;
  std::vector<PartTemplate> parts;
  Feedback feedback;
  std::vector<std::string> module_links;
  bool derived_key = false;  // answer key derived by the bank author, not published
};

struct InstancePart {
  std::string id;  // "<template id>.<letter>"
  std::string prompt;
  std::string kind;
  GraderSpec spec;
  json spec_json;
  json model_answer;
  std::vector<OptionLabel> options;
};

struct QuestionInstance {
  std::string template_id;
  std::uint64_t seed = 0;
  std::map<std::string, Rational> params;
  std::string preamble;
  std::string body;
  std::vector<InstancePart> parts;
};

struct DisplayPart {
  std::string id;
  std::string prompt;
  std::string kind;
  std::string widget;  // expression|number|dropdown|checkboxes|sketch|bindings
  std::vector<OptionLabel> options;
  std::optional<Canvas> canvas;
  std::vector<std::string> variables;
};

struct DisplayQuestion {
  std::string template_id;
  std::string topic;
  std::string element;
  std::string preamble;
  std::string body;
  std::vector<DisplayPart> parts;
};

class Bank {
 public:
  Bank() = default;
  explicit Bank(std::vector<QuestionTemplate> templates);

  const std::vector<QuestionTemplate>& templates() const { return templates_; }
  const QuestionTemplate& find(std::string_view id) const;  // throws UnknownTemplate
  bool contains(std::string_view id) const;
  std::vector<const QuestionTemplate*> by_topic(Topic topic) const;

 private:
  std::vector<QuestionTemplate> templates_;
};

struct ValidationIssue {
  std::string template_id;
  std::string message;
};

struct ValidationReport {
  bool ok = true;
  std::vector<ValidationIssue> errors;
  std::vector<std::string> warnings;
};

// Structural decoding only; throws FileFormatError on malformed documents.
QuestionTemplate template_from_json(const json& j);
json template_to_json(const QuestionTemplate& t);
Bank bank_from_json(const json& doc);
Bank load_bank(const std::string& path);

ValidationReport validate_bank(const json& doc);
ValidationReport validate_bank_file(const std::string& path);
json report_to_json(const ValidationReport& r);

// Draws parameters from a PRNG seeded by (seed, t.id), rejecting draws that
// violate constraints, at most kMaxParameterDraws times.
inline constexpr int kMaxParameterDraws = 10000;
QuestionInstance instantiate(const QuestionTemplate& t, std::uint64_t seed);

// Stable per (student, template): retakes reuse the numbers.
std::uint64_t student_seed(std::string_view student_id, std::string_view template_id);

// Every assignment satisfying the constraints, when the product of domains
// has at most `limit` elements; nullopt otherwise.
std::optional<std::vector<std::map<std::string, Rational>>> feasible_assignments(
    const QuestionTemplate& t, std::size_t limit = 200000);

DisplayQuestion render(const QuestionInstance& inst, const QuestionTemplate& t);
json display_to_json(const DisplayQuestion& q);
json instance_to_json(const QuestionInstance& inst);

// A response that grades as correct: the part's model answer when present,
// otherwise one derived from the grader spec. Throws InvalidSpec for
// constraint parts without a model answer.
json reference_response(const InstancePart& part);

// Strings that would reveal the answer to a part: model/reference answers,
// expected expressions, accepted values, correct option ids and labels.
std::vector<std::string> answer_strings(const InstancePart& part);

// Substitutes {name} placeholders. In expression context negative and
// fractional values are parenthesized. "{{" and "}}" are literal braces.
std::string substitute(std::string_view text, const std::map<std::string, Rational>& values,
                       bool expression_context);

// Placeholder names used in text.
std::vector<std::string> placeholders(std::string_view text);

}  // namespace prepmark
