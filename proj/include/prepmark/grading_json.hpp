#pragma once

#include <string_view>

#include "json.hpp"

#include "prepmark/grading.hpp"

namespace prepmark {

using nlohmann::json;

// A JSON number, or a string holding a constant expression ("-7/2",
// "sqrt(2)").
double json_number(const json& value);

SamplingConfig sampling_from_json(const json& j);
json sampling_to_json(const SamplingConfig& cfg);

// `kind` is one of structural_poly, equivalence, antiderivative,
// numeric_multi, choice_single, choice_multi, line_sketch, constraint.
// Throws InvalidSpec for unknown kinds or missing fields; expression fields
// propagate SyntaxError.
GraderSpec spec_from_json(std::string_view kind, const json& j);
json spec_to_json(const GraderSpec& spec);

bool is_known_kind(std::string_view kind);

// Decodes a response for a part of the given kind. Throws ArmMismatch when
// the JSON shape does not fit the kind.
SubmittedResponse response_from_json(std::string_view kind, const json& j);
json response_to_json(const SubmittedResponse& response);

json outcome_to_json(const GradeOutcome& outcome);
GradeOutcome outcome_from_json(const json& j);

}  // namespace prepmark
