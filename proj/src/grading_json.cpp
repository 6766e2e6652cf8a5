#include "prepmark/grading_json.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include "prepmark/error.hpp"

namespace prepmark {
namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(errc::kInvalidSpec, what); }

const json& field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) invalid(std::string("missing field '") + name + "'");
  return j.at(name);
}

std::string string_field(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_string()) invalid(std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

template <class T>
T value_or(const json& j, const char* name, T fallback) {
  if (!j.is_object() || !j.contains(name)) return fallback;
  if constexpr (std::is_same_v<T, double>) {
    return json_number(j.at(name));
  } else {
    return j.at(name).get<T>();
  }
}

Interval interval_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) invalid("interval must be [lo, hi]");
  return {json_number(j[0]), json_number(j[1])};
}

std::string shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

constexpr std::array<std::string_view, 8> kKinds{
    "structural_poly", "equivalence",  "antiderivative", "numeric_multi",
    "choice_single",   "choice_multi", "line_sketch",    "constraint"};

std::vector<std::string> option_ids(const json& options) {
  if (!options.is_array()) invalid("options must be a list");
  std::vector<std::string> ids;
  for (const auto& o : options) {
    if (o.is_string()) {
      ids.push_back(o.get<std::string>());
    } else {
      ids.push_back(string_field(o, "id"));
    }
  }
  return ids;
}

}  // namespace

double json_number(const json& value) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) {
    Expr e = parse(value.get<std::string>());
    if (!free_variables(e).empty()) invalid("numeric field must be a constant: " + value.get<std::string>());
    return evaluate(e, {});
  }
  invalid("expected a number");
}

bool is_known_kind(std::string_view kind) {
  return std::find(kKinds.begin(), kKinds.end(), kind) != kKinds.end();
}

SamplingConfig sampling_from_json(const json& j) {
  SamplingConfig cfg;
  if (j.is_null()) return cfg;
  if (!j.is_object()) invalid("sampling must be an object");
  cfg.point_count = value_or<int>(j, "point_count", cfg.point_count);
  if (j.contains("domain")) cfg.domain = interval_from_json(j.at("domain"));
  if (j.contains("variables")) {
    for (const auto& [name, iv] : j.at("variables").items()) {
      cfg.variable_domains[name] = interval_from_json(iv);
    }
  }
  cfg.pole_guard = value_or<double>(j, "pole_guard", cfg.pole_guard);
  cfg.relative_tolerance = value_or<double>(j, "relative_tolerance", cfg.relative_tolerance);
  cfg.max_resamples = value_or<int>(j, "max_resamples", cfg.max_resamples);
  cfg.rng_seed = value_or<std::uint64_t>(j, "seed", cfg.rng_seed);
  cfg.validate();
  return cfg;
}

json sampling_to_json(const SamplingConfig& cfg) {
  json j{{"point_count", cfg.point_count},
         {"domain", {cfg.domain.lo, cfg.domain.hi}},
         {"pole_guard", cfg.pole_guard},
         {"relative_tolerance", cfg.relative_tolerance},
         {"max_resamples", cfg.max_resamples},
         {"seed", cfg.rng_seed}};
  if (!cfg.variable_domains.empty()) {
    json vars = json::object();
    for (const auto& [name, iv] : cfg.variable_domains) vars[name] = {iv.lo, iv.hi};
    j["variables"] = vars;
  }
  return j;
}

GraderSpec spec_from_json(std::string_view kind, const json& j) {
  if (!j.is_object()) invalid("grader spec must be an object");
  const json sampling = j.contains("sampling") ? j.at("sampling") : json();
  if (kind == "structural_poly") {
    return StructuralPolynomialSpec{parse(string_field(j, "expected"))};
  }
  if (kind == "equivalence") {
    return EquivalenceSpec{parse(string_field(j, "expected")), sampling_from_json(sampling)};
  }
  if (kind == "antiderivative") {
    AntiderivativeSpec s;
    s.integrand = parse(string_field(j, "integrand"));
    s.var = value_or<std::string>(j, "var", s.var);
    s.constant_symbol = value_or<std::string>(j, "constant_symbol", s.constant_symbol);
    s.penalty = value_or<double>(j, "penalty", s.penalty);
    s.sampling = sampling_from_json(sampling);
    return s;
  }
  if (kind == "numeric_multi") {
    NumericMultiSpec s;
    const json& accepted = field(j, "accepted");
    if (!accepted.is_array()) invalid("accepted must be a list");
    for (const auto& a : accepted) s.accepted.push_back(json_number(a));
    s.abs_tolerance = value_or<double>(j, "abs_tolerance", s.abs_tolerance);
    return s;
  }
  if (kind == "choice_single" || kind == "choice_multi") {
    ChoiceSpec s;
    s.mode = kind == "choice_single" ? ChoiceMode::Single : ChoiceMode::Multi;
    s.options = option_ids(field(j, "options"));
    const json& correct = field(j, "correct");
    if (correct.is_string()) {
      s.correct.insert(correct.get<std::string>());
    } else if (correct.is_array()) {
      for (const auto& c : correct) s.correct.insert(c.get<std::string>());
    } else {
      invalid("correct must be an id or a list of ids");
    }
    return s;
  }
  if (kind == "line_sketch") {
    LineSketchSpec s;
    if (j.contains("through")) {
      const json& pts = j.at("through");
      if (!pts.is_array() || pts.size() != 2 || pts[0].size() != 2 || pts[1].size() != 2) {
        invalid("through must be [[x1, y1], [x2, y2]]");
      }
      const double x1 = json_number(pts[0][0]), y1 = json_number(pts[0][1]);
      const double x2 = json_number(pts[1][0]), y2 = json_number(pts[1][1]);
      if (x1 == x2) invalid("target line is vertical");
      s.target.slope = (y2 - y1) / (x2 - x1);
      s.target.intercept = y1 - s.target.slope * x1;
    } else {
      const json& target = field(j, "target");
      s.target.slope = json_number(field(target, "slope"));
      s.target.intercept = json_number(field(target, "intercept"));
    }
    s.slope_tol = value_or<double>(j, "slope_tol", s.slope_tol);
    s.intercept_tol = value_or<double>(j, "intercept_tol", s.intercept_tol);
    if (j.contains("canvas")) {
      const json& c = j.at("canvas");
      if (!c.is_array() || c.size() != 4) invalid("canvas must be [x_min, x_max, y_min, y_max]");
      s.canvas = {json_number(c[0]), json_number(c[1]), json_number(c[2]), json_number(c[3])};
    }
    return s;
  }
  if (kind == "constraint") {
    return ConstraintSpec{Predicate::parse(string_field(j, "predicate"))};
  }
  invalid("unknown part kind '" + std::string(kind) + "'");
}

json spec_to_json(const GraderSpec& spec) {
  json j = std::visit(
      overloaded{
          [](const StructuralPolynomialSpec& s) { return json{{"expected", render(s.expected)}}; },
          [](const EquivalenceSpec& s) {
            return json{{"expected", render(s.expected)}, {"sampling", sampling_to_json(s.sampling)}};
          },
          [](const AntiderivativeSpec& s) {
            return json{{"integrand", render(s.integrand)},
                        {"var", s.var},
                        {"constant_symbol", s.constant_symbol},
                        {"penalty", s.penalty},
                        {"sampling", sampling_to_json(s.sampling)}};
          },
          [](const NumericMultiSpec& s) {
            return json{{"accepted", s.accepted}, {"abs_tolerance", s.abs_tolerance}};
          },
          [](const ChoiceSpec& s) {
            return json{{"options", s.options}, {"correct", s.correct}};
          },
          [](const LineSketchSpec& s) {
            return json{{"target", {{"slope", s.target.slope}, {"intercept", s.target.intercept}}},
                        {"slope_tol", s.slope_tol},
                        {"intercept_tol", s.intercept_tol},
                        {"canvas", {s.canvas.x_min, s.canvas.x_max, s.canvas.y_min, s.canvas.y_max}}};
          },
          [](const ConstraintSpec& s) { return json{{"predicate", s.predicate.source()}}; },
      },
      spec);
  j["kind"] = std::string(spec_kind_name(spec));
  return j;
}

SubmittedResponse response_from_json(std::string_view kind, const json& j) {
  auto mismatch = [&]() -> SubmittedResponse {
    throw Error(errc::kArmMismatch,
                "response shape does not fit a " + std::string(kind) + " part");
  };
  if (kind == "structural_poly" || kind == "equivalence" || kind == "antiderivative") {
    if (!j.is_string()) return mismatch();
    return ExpressionResponse{j.get<std::string>()};
  }
  if (kind == "numeric_multi") {
    if (j.is_number()) return NumberResponse{shortest(j.get<double>())};
    if (!j.is_string()) return mismatch();
    return NumberResponse{j.get<std::string>()};
  }
  if (kind == "choice_single") {
    if (!j.is_string()) return mismatch();
    return OptionResponse{j.get<std::string>()};
  }
  if (kind == "choice_multi") {
    if (!j.is_array()) return mismatch();
    OptionSetResponse r;
    for (const auto& id : j) {
      if (!id.is_string()) return mismatch();
      r.ids.insert(id.get<std::string>());
    }
    return r;
  }
  if (kind == "line_sketch") {
    auto point = [&](const json& p) {
      if (p.is_array() && p.size() == 2 && p[0].is_number() && p[1].is_number()) {
        return Point{p[0].get<double>(), p[1].get<double>()};
      }
      if (p.is_object() && p.contains("x") && p.contains("y") && p["x"].is_number() &&
          p["y"].is_number()) {
        return Point{p["x"].get<double>(), p["y"].get<double>()};
      }
      mismatch();
      return Point{};
    };
    if (!j.is_array() || j.size() != 2) return mismatch();
    return PointPairResponse{point(j[0]), point(j[1])};
  }
  if (kind == "constraint") {
    if (!j.is_object()) return mismatch();
    BindingsResponse r;
    for (const auto& [name, v] : j.items()) {
      if (v.is_string()) {
        r.values[name] = v.get<std::string>();
      } else if (v.is_number()) {
        r.values[name] = shortest(v.get<double>());
      } else {
        return mismatch();
      }
    }
    return r;
  }
  return mismatch();
}

json response_to_json(const SubmittedResponse& response) {
  return std::visit(overloaded{
                        [](const ExpressionResponse& r) { return json(r.text); },
                        [](const NumberResponse& r) { return json(r.text); },
                        [](const OptionResponse& r) { return json(r.id); },
                        [](const OptionSetResponse& r) { return json(r.ids); },
                        [](const PointPairResponse& r) {
                          return json{{r.first.x, r.first.y}, {r.second.x, r.second.y}};
                        },
                        [](const BindingsResponse& r) { return json(r.values); },
                    },
                    response);
}

json outcome_to_json(const GradeOutcome& o) {
  json j{{"score", o.score},
         {"correct", o.correct},
         {"flags", o.flags},
         {"feedback_key", o.feedback_key}};
  if (!o.message.empty()) j["message"] = o.message;
  return j;
}

GradeOutcome outcome_from_json(const json& j) {
  GradeOutcome o;
  o.score = j.at("score").get<double>();
  o.correct = j.at("correct").get<bool>();
  o.flags = j.at("flags").get<std::set<std::string>>();
  o.feedback_key = j.at("feedback_key").get<std::string>();
  if (j.contains("message")) o.message = j.at("message").get<std::string>();
  return o;
}

}  // namespace prepmark
