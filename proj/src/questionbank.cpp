#include "prepmark/questionbank.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "prepmark/equivalence.hpp"
#include "prepmark/error.hpp"
#include "prepmark/polynomial.hpp"
#include "prepmark/predicate.hpp"

namespace prepmark {
namespace {

constexpr std::array<std::string_view, 6> kTopicNames{"Algebra",   "Numbers",  "Geometry",
                                                      "Functions", "Calculus", "LogicAndSets"};

[[noreturn]] void format_error(const std::string& what) { throw Error(errc::kFileFormat, what); }

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string value_text(const Rational& q, bool expression_context) {
  std::string s = to_string(q);
  if (expression_context && (q < 0 || !is_integer(q))) return "(" + s + ")";
  return s;
}

Rational rational_from_json(const json& v) {
  if (v.is_number_integer()) return Rational(v.get<long long>());
  if (v.is_number()) {
    auto q = parse_rational(v.dump());
    if (!q) format_error("cannot read number " + v.dump());
    return *q;
  }
  if (v.is_string()) {
    const std::string text = v.get<std::string>();
    if (auto q = parse_rational(text)) return *q;
    Scalar s = evaluate_scalar(parse(text), {});
    if (const auto* q = std::get_if<Rational>(&s)) return *q;
    format_error("parameter value '" + text + "' is not rational");
  }
  format_error("parameter values must be numbers or strings");
}

std::string string_or(const json& j, const char* key, std::string fallback = {}) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) format_error(std::string("field '") + key + "' must be a string");
  return j.at(key).get<std::string>();
}

std::vector<std::string> string_list(const json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  const json& v = j.at(key);
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array()) format_error(std::string("field '") + key + "' must be a list of strings");
  for (const auto& s : v) {
    if (!s.is_string()) format_error(std::string("field '") + key + "' must be a list of strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

ParamSpec param_from_json(const json& j) {
  if (!j.is_object()) format_error("each param must be an object");
  ParamSpec p;
  p.name = string_or(j, "name");
  if (p.name.empty() || !is_ident_start(p.name[0]) ||
      !std::all_of(p.name.begin(), p.name.end(), is_ident_char)) {
    format_error("invalid parameter name '" + p.name + "'");
  }
  p.constraints = string_list(j, "constraints");
  if (j.contains("expr")) {
    p.derived = string_or(j, "expr");
  } else if (j.contains("values")) {
    if (!j.at("values").is_array()) format_error("values of " + p.name + " must be a list");
    for (const auto& v : j.at("values")) p.values.push_back(rational_from_json(v));
  } else if (j.contains("domain")) {
    const json& d = j.at("domain");
    Rational lo, hi, step = 1;
    if (d.is_array() && d.size() >= 2) {
      lo = rational_from_json(d[0]);
      hi = rational_from_json(d[1]);
      if (d.size() > 2) step = rational_from_json(d[2]);
    } else if (d.is_object() && d.contains("lo") && d.contains("hi")) {
      lo = rational_from_json(d.at("lo"));
      hi = rational_from_json(d.at("hi"));
      if (d.contains("step")) step = rational_from_json(d.at("step"));
    } else {
      format_error("domain of " + p.name + " must be [lo, hi, step?] or {lo, hi, step}");
    }
    if (step <= 0) format_error("domain step of " + p.name + " must be positive");
    for (Rational v = lo; v <= hi; v += step) {
      p.values.push_back(v);
      if (p.values.size() > 100000) format_error("domain of " + p.name + " is too large");
    }
  } else {
    format_error("param " + p.name + " needs values, domain or expr");
  }
  return p;
}

json param_to_json(const ParamSpec& p) {
  json j{{"name", p.name}};
  if (p.derived) {
    j["expr"] = *p.derived;
  } else {
    json values = json::array();
    for (const auto& v : p.values) {
      if (is_integer(v)) {
        values.push_back(numerator(v).convert_to<long long>());
      } else {
        values.push_back(to_string(v));
      }
    }
    j["values"] = values;
  }
  if (!p.constraints.empty()) j["constraints"] = p.constraints;
  return j;
}

json substitute_json(const json& j, const std::map<std::string, Rational>& values,
                     bool expression_context) {
  if (j.is_string()) return substitute(j.get<std::string>(), values, expression_context);
  if (j.is_array()) {
    json out = json::array();
    for (const auto& v : j) out.push_back(substitute_json(v, values, expression_context));
    return out;
  }
  if (j.is_object()) {
    json out = json::object();
    for (const auto& [k, v] : j.items()) {
      // option labels and ids are display text, not expressions
      const bool expr = expression_context && k != "options" && k != "label" && k != "id";
      out[k] = substitute_json(v, values, expr);
    }
    return out;
  }
  return j;
}

void collect_placeholders(const json& j, std::set<std::string>& out) {
  if (j.is_string()) {
    for (auto& name : placeholders(j.get<std::string>())) out.insert(std::move(name));
  } else if (j.is_array() || j.is_object()) {
    for (const auto& v : j) collect_placeholders(v, out);
  }
}

bool constraints_hold(const QuestionTemplate& t, const std::map<std::string, Rational>& values) {
  for (const auto& p : t.params) {
    for (const auto& c : p.constraints) {
      ExactBindings none;
      if (!Predicate::parse(substitute(c, values, true)).evaluate(none)) return false;
    }
  }
  return true;
}

// Fills derived parameters in declaration order; false when a derivation is
// undefined for this draw.
bool derive(const QuestionTemplate& t, std::map<std::string, Rational>& values) {
  for (const auto& p : t.params) {
    if (!p.derived) continue;
    try {
      Scalar s = evaluate_scalar(parse(substitute(*p.derived, values, true)), {});
      const auto* q = std::get_if<Rational>(&s);
      if (!q) throw Error(errc::kInvalidSpec, "derived parameter " + p.name + " is not rational");
      values[p.name] = *q;
    } catch (const Error& e) {
      if (e.code() == errc::kNonFiniteResult) return false;
      throw;
    }
  }
  return true;
}

std::vector<OptionLabel> option_labels(const json& spec) {
  std::vector<OptionLabel> out;
  if (!spec.contains("options") || !spec.at("options").is_array()) return out;
  for (const auto& o : spec.at("options")) {
    if (o.is_string()) {
      out.push_back({o.get<std::string>(), o.get<std::string>()});
    } else if (o.is_object()) {
      const std::string id = o.value("id", "");
      out.push_back({id, o.value("label", id)});
    }
  }
  return out;
}

QuestionInstance build_instance(const QuestionTemplate& t, std::uint64_t seed,
                                const std::map<std::string, Rational>& values) {
  QuestionInstance inst;
  inst.template_id = t.id;
  inst.seed = seed;
  inst.params = values;
  inst.preamble = substitute(t.preamble, values, false);
  inst.body = substitute(t.body, values, false);
  for (std::size_t i = 0; i < t.parts.size(); ++i) {
    const PartTemplate& pt = t.parts[i];
    InstancePart part{
        .id = t.id + "." + static_cast<char>('a' + i),
        .prompt = substitute(pt.prompt, values, false),
        .kind = pt.kind,
        .spec = NumericMultiSpec{},
        .spec_json = substitute_json(pt.spec, values, true),
        .model_answer = substitute_json(pt.model_answer, values, true),
        .options = {},
    };
    try {
      part.spec = spec_from_json(pt.kind, part.spec_json);
    } catch (const Error& e) {
      throw Error(e.code(), "part " + part.id + ": " + e.what());
    }
    part.options = option_labels(part.spec_json);
    inst.parts.push_back(std::move(part));
  }
  return inst;
}

std::string widget_for(std::string_view kind) {
  if (kind == "numeric_multi") return "number";
  if (kind == "choice_single") return "dropdown";
  if (kind == "choice_multi") return "checkboxes";
  if (kind == "line_sketch") return "sketch";
  if (kind == "constraint") return "bindings";
  return "expression";
}

}  // namespace

std::string_view topic_name(Topic t) { return kTopicNames[static_cast<std::size_t>(t)]; }

std::optional<Topic> topic_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kTopicNames.size(); ++i) {
    if (kTopicNames[i] == name) return static_cast<Topic>(i);
  }
  return std::nullopt;
}

std::string_view element_name(Element e) {
  return e == Element::Diagnostic ? "diagnostic" : "self_learning";
}

std::vector<std::string> placeholders(std::string_view text) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{') continue;
    if (i + 1 < text.size() && text[i + 1] == '{') {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    if (j < text.size() && is_ident_start(text[j])) {
      while (j < text.size() && is_ident_char(text[j])) ++j;
      if (j < text.size() && text[j] == '}') out.emplace_back(text.substr(i + 1, j - i - 1));
    }
  }
  return out;
}

std::string substitute(std::string_view text, const std::map<std::string, Rational>& values,
                       bool expression_context) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if ((c == '{' || c == '}') && i + 1 < text.size() && text[i + 1] == c) {
      out.push_back(c);
      ++i;
      continue;
    }
    if (c == '{') {
      std::size_t j = i + 1;
      if (j < text.size() && is_ident_start(text[j])) {
        while (j < text.size() && is_ident_char(text[j])) ++j;
        if (j < text.size() && text[j] == '}') {
          const std::string name(text.substr(i + 1, j - i - 1));
          auto it = values.find(name);
          if (it == values.end()) {
            throw Error(errc::kInvalidSpec, "undeclared parameter {" + name + "}");
          }
          out += value_text(it->second, expression_context);
          i = j;
          continue;
        }
      }
    }
    out.push_back(c);
  }
  return out;
}

// ---- bank --------------------------------------------------------------------

Bank::Bank(std::vector<QuestionTemplate> templates) : templates_(std::move(templates)) {}

const QuestionTemplate& Bank::find(std::string_view id) const {
  for (const auto& t : templates_) {
    if (t.id == id) return t;
  }
  throw Error(errc::kUnknownTemplate, "unknown template '" + std::string(id) + "'");
}

bool Bank::contains(std::string_view id) const {
  return std::any_of(templates_.begin(), templates_.end(), [&](const auto& t) { return t.id == id; });
}

std::vector<const QuestionTemplate*> Bank::by_topic(Topic topic) const {
  std::vector<const QuestionTemplate*> out;
  for (const auto& t : templates_) {
    if (t.topic == topic) out.push_back(&t);
  }
  return out;
}

QuestionTemplate template_from_json(const json& j) {
  if (!j.is_object()) format_error("each template must be an object");
  QuestionTemplate t;
  t.id = string_or(j, "id");
  if (t.id.empty()) format_error("template without id");
  const std::string topic = string_or(j, "topic");
  auto tp = topic_from_name(topic);
  if (!tp) format_error("unknown topic '" + topic + "'");
  t.topic = *tp;
  const std::string element = string_or(j, "element", "diagnostic");
  if (element == "diagnostic") {
    t.element = Element::Diagnostic;
  } else if (element == "self_learning") {
    t.element = Element::SelfLearning;
  } else {
    format_error("unknown element '" + element + "'");
  }
  t.preamble = string_or(j, "preamble");
  t.body = string_or(j, "body");
  if (j.contains("params")) {
    if (!j.at("params").is_array()) format_error("params must be a list");
    for (const auto& p : j.at("params")) t.params.push_back(param_from_json(p));
  }
  if (!j.contains("parts") || !j.at("parts").is_array()) format_error("parts must be a list");
  for (const auto& p : j.at("parts")) {
    if (!p.is_object()) format_error("each part must be an object");
    PartTemplate part;
    part.prompt = string_or(p, "prompt");
    part.kind = string_or(p, "kind");
    part.spec = p.contains("spec") ? p.at("spec") : json::object();
    part.model_answer = p.contains("model_answer") ? p.at("model_answer") : json();
    t.parts.push_back(std::move(part));
  }
  if (j.contains("feedback")) {
    const json& f = j.at("feedback");
    t.feedback.on_correct = string_or(f, "on_correct");
    t.feedback.on_wrong = string_or(f, "on_wrong");
    t.feedback.links = string_list(f, "links");
  }
  t.module_links = string_list(j, "module_links");
  t.derived_key = j.value("derived_key", false);
  return t;
}

json template_to_json(const QuestionTemplate& t) {
  json params = json::array();
  for (const auto& p : t.params) params.push_back(param_to_json(p));
  json parts = json::array();
  for (const auto& p : t.parts) {
    json part{{"prompt", p.prompt}, {"kind", p.kind}, {"spec", p.spec}};
    if (!p.model_answer.is_null()) part["model_answer"] = p.model_answer;
    parts.push_back(part);
  }
  json j{{"id", t.id},
         {"topic", topic_name(t.topic)},
         {"element", element_name(t.element)},
         {"body", t.body},
         {"params", params},
         {"parts", parts},
         {"feedback",
          {{"on_correct", t.feedback.on_correct},
           {"on_wrong", t.feedback.on_wrong},
           {"links", t.feedback.links}}},
         {"module_links", t.module_links}};
  if (!t.preamble.empty()) j["preamble"] = t.preamble;
  if (t.derived_key) j["derived_key"] = true;
  return j;
}

namespace {

const json& templates_of(const json& doc) {
  if (!doc.is_object() || !doc.contains("templates") || !doc.at("templates").is_array()) {
    format_error("bank must be an object with a 'templates' list");
  }
  return doc.at("templates");
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::kIo, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    format_error(path + ": " + e.what());
  }
}

}  // namespace

Bank bank_from_json(const json& doc) {
  std::vector<QuestionTemplate> out;
  std::set<std::string> ids;
  for (const auto& j : templates_of(doc)) {
    QuestionTemplate t = template_from_json(j);
    if (!ids.insert(t.id).second) format_error("duplicate template id '" + t.id + "'");
    out.push_back(std::move(t));
  }
  return Bank(std::move(out));
}

Bank load_bank(const std::string& path) { return bank_from_json(read_json_file(path)); }

// ---- instantiation ---------------------------------------------------------

std::uint64_t student_seed(std::string_view student_id, std::string_view template_id) {
  std::string key(student_id);
  key.push_back('\x1f');
  key.append(template_id);
  return mix64(hash64(key));
}

QuestionInstance instantiate(const QuestionTemplate& t, std::uint64_t seed) {
  std::mt19937_64 rng(mix64(seed ^ hash64(t.id)));
  for (int draw = 0; draw < kMaxParameterDraws; ++draw) {
    std::map<std::string, Rational> values;
    for (const auto& p : t.params) {
      if (p.derived) continue;
      if (p.values.empty()) {
        throw Error(errc::kConstraintUnsatisfiable, "parameter " + p.name + " has no values");
      }
      values[p.name] = p.values[rng() % p.values.size()];
    }
    if (!derive(t, values) || !constraints_hold(t, values)) continue;
    return build_instance(t, seed, values);
  }
  throw Error(errc::kConstraintUnsatisfiable,
              fmt::format("no parameter draw for {} satisfied the constraints in {} attempts", t.id,
                          kMaxParameterDraws));
}

std::optional<std::vector<std::map<std::string, Rational>>> feasible_assignments(
    const QuestionTemplate& t, std::size_t limit) {
  std::vector<const ParamSpec*> free;
  std::size_t total = 1;
  for (const auto& p : t.params) {
    if (p.derived) continue;
    free.push_back(&p);
    if (p.values.empty()) return std::vector<std::map<std::string, Rational>>{};
    if (total > limit / p.values.size()) return std::nullopt;
    total *= p.values.size();
  }
  std::vector<std::map<std::string, Rational>> out;
  std::vector<std::size_t> index(free.size(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    std::map<std::string, Rational> values;
    for (std::size_t k = 0; k < free.size(); ++k) values[free[k]->name] = free[k]->values[index[k]];
    if (derive(t, values) && constraints_hold(t, values)) out.push_back(std::move(values));
    for (std::size_t k = free.size(); k-- > 0;) {
      if (++index[k] < free[k]->values.size()) break;
      index[k] = 0;
    }
  }
  return out;
}

// ---- validation --------------------------------------------------------------

namespace {

void validate_template(const QuestionTemplate& t, std::vector<ValidationIssue>& errors) {
  auto error = [&](std::string message) { errors.push_back({t.id, std::move(message)}); };

  if (t.topic == Topic::LogicAndSets && t.element != Element::SelfLearning) {
    error("LogicAndSets templates must be self_learning");
  }
  if (t.parts.empty()) error("template has no parts");

  std::set<std::string> declared;
  for (const auto& p : t.params) {
    if (!declared.insert(p.name).second) error("parameter " + p.name + " declared twice");
    if (!p.derived && p.values.empty()) error("parameter " + p.name + " has an empty domain");
  }

  std::set<std::string> used;
  std::set<std::string> referenced_by_params;
  for (auto& n : placeholders(t.body)) used.insert(n);
  for (auto& n : placeholders(t.preamble)) used.insert(n);
  for (const auto& part : t.parts) {
    for (auto& n : placeholders(part.prompt)) used.insert(n);
    collect_placeholders(part.spec, used);
    collect_placeholders(part.model_answer, used);
  }
  for (const auto& p : t.params) {
    if (p.derived) {
      for (auto& n : placeholders(*p.derived)) referenced_by_params.insert(n);
    }
    for (const auto& c : p.constraints) {
      for (auto& n : placeholders(c)) {
        if (!declared.contains(n)) error("constraint of " + p.name + " uses undeclared {" + n + "}");
      }
    }
  }
  for (const auto& n : used) {
    if (!declared.contains(n)) error("undeclared parameter {" + n + "}");
  }
  for (const auto& n : referenced_by_params) {
    if (!declared.contains(n)) error("undeclared parameter {" + n + "}");
  }
  for (const auto& p : t.params) {
    if (!used.contains(p.name) && !referenced_by_params.contains(p.name)) {
      error("parameter " + p.name + " is never used");
    }
  }

  for (std::size_t i = 0; i < t.parts.size(); ++i) {
    if (!is_known_kind(t.parts[i].kind)) {
      error(fmt::format("part {}: unknown kind '{}'", static_cast<char>('a' + i), t.parts[i].kind));
    }
  }
  if (!errors.empty() && errors.back().template_id == t.id) return;

  // Domain emptiness and per-instance checks.
  std::vector<QuestionInstance> samples;
  try {
    auto feasible = feasible_assignments(t);
    if (feasible && feasible->empty()) {
      error("constraints leave no admissible parameter values");
      return;
    }
    for (std::uint64_t seed : {0ULL, 1ULL, 2ULL}) samples.push_back(instantiate(t, seed));
  } catch (const SyntaxError& e) {
    error(fmt::format("parameter expression or constraint: {}", e.what()));
    return;
  } catch (const Error& e) {
    error(e.what());
    return;
  }

  for (const auto& inst : samples) {
    for (const auto& part : inst.parts) {
      try {
        validate_spec(part.spec);
      } catch (const Error& e) {
        error(fmt::format("part {}: {}", part.id, e.what()));
        continue;
      }
      try {
        const GradeOutcome o = grade(part.spec, response_from_json(part.kind, reference_response(part)));
        if (!o.correct) {
          error(fmt::format("part {}: reference answer does not grade as correct ({})", part.id,
                            o.message.empty() ? o.feedback_key : o.message));
        }
      } catch (const Error& e) {
        error(fmt::format("part {}: reference answer: {}", part.id, e.what()));
      }
    }
  }
}

}  // namespace

ValidationReport validate_bank(const json& doc) {
  ValidationReport report;
  const json& templates = templates_of(doc);
  if (templates.empty()) report.warnings.emplace_back("no templates");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < templates.size(); ++i) {
    QuestionTemplate t;
    try {
      t = template_from_json(templates[i]);
    } catch (const Error& e) {
      const std::string id = templates[i].is_object() && templates[i].contains("id") &&
                                     templates[i]["id"].is_string()
                                 ? templates[i]["id"].get<std::string>()
                                 : fmt::format("#{}", i);
      report.errors.push_back({id, e.what()});
      continue;
    }
    if (!ids.insert(t.id).second) {
      report.errors.push_back({t.id, "duplicate template id"});
      continue;
    }
    validate_template(t, report.errors);
  }
  report.ok = report.errors.empty();
  return report;
}

ValidationReport validate_bank_file(const std::string& path) {
  return validate_bank(read_json_file(path));
}

json report_to_json(const ValidationReport& r) {
  json errors = json::array();
  for (const auto& e : r.errors) errors.push_back({{"template", e.template_id}, {"message", e.message}});
  return json{{"ok", r.ok}, {"errors", errors}, {"warnings", r.warnings}};
}

// ---- rendering -----------------------------------------------------------------

DisplayQuestion render(const QuestionInstance& inst, const QuestionTemplate& t) {
  DisplayQuestion q;
  q.template_id = inst.template_id;
  q.topic = topic_name(t.topic);
  q.element = element_name(t.element);
  q.preamble = inst.preamble;
  q.body = inst.body;
  for (const auto& part : inst.parts) {
    DisplayPart d;
    d.id = part.id;
    d.prompt = part.prompt;
    d.kind = part.kind;
    d.widget = widget_for(part.kind);
    d.options = part.options;
    if (const auto* s = std::get_if<LineSketchSpec>(&part.spec)) d.canvas = s->canvas;
    if (const auto* s = std::get_if<ConstraintSpec>(&part.spec)) {
      const auto& vars = s->predicate.variables();
      d.variables.assign(vars.begin(), vars.end());
    }
    q.parts.push_back(std::move(d));
  }
  return q;
}

json display_to_json(const DisplayQuestion& q) {
  json parts = json::array();
  for (const auto& p : q.parts) {
    json j{{"id", p.id}, {"prompt", p.prompt}, {"kind", p.kind}, {"widget", p.widget}};
    if (!p.options.empty()) {
      json opts = json::array();
      for (const auto& o : p.options) opts.push_back({{"id", o.id}, {"label", o.label}});
      j["options"] = opts;
    }
    if (p.canvas) {
      j["canvas"] = {p.canvas->x_min, p.canvas->x_max, p.canvas->y_min, p.canvas->y_max};
    }
    if (!p.variables.empty()) j["variables"] = p.variables;
    parts.push_back(j);
  }
  json j{{"template_id", q.template_id},
         {"topic", q.topic},
         {"element", q.element},
         {"body", q.body},
         {"parts", parts}};
  if (!q.preamble.empty()) j["preamble"] = q.preamble;
  return j;
}

json instance_to_json(const QuestionInstance& inst) {
  json params = json::object();
  for (const auto& [k, v] : inst.params) params[k] = to_string(v);
  json parts = json::array();
  for (const auto& p : inst.parts) {
    json opts = json::array();
    for (const auto& o : p.options) opts.push_back({{"id", o.id}, {"label", o.label}});
    parts.push_back({{"id", p.id},
                     {"prompt", p.prompt},
                     {"kind", p.kind},
                     {"spec", p.spec_json},
                     {"model_answer", p.model_answer},
                     {"options", opts}});
  }
  return json{{"template_id", inst.template_id},
              {"seed", inst.seed},
              {"params", params},
              {"preamble", inst.preamble},
              {"body", inst.body},
              {"parts", parts}};
}

}  // namespace prepmark

namespace prepmark {

json reference_response(const InstancePart& part) {
  if (!part.model_answer.is_null()) return part.model_answer;
  return std::visit(
      overloaded{
          [](const StructuralPolynomialSpec& s) {
            return json(render(to_polynomial_nf(s.expected).to_expr()));
          },
          [](const EquivalenceSpec& s) { return json(render(s.expected)); },
          [&](const AntiderivativeSpec&) -> json {
            throw Error(errc::kInvalidSpec, "part " + part.id + " needs a model_answer");
          },
          [](const NumericMultiSpec& s) { return json(s.accepted.front()); },
          [](const ChoiceSpec& s) {
            if (s.mode == ChoiceMode::Single) return json(*s.correct.begin());
            return json(s.correct);
          },
          [](const LineSketchSpec& s) {
            // first and last grid points of the target line inside the canvas
            std::vector<std::array<double, 2>> inside;
            const double step = (s.canvas.x_max - s.canvas.x_min) / 24.0;
            for (int i = 0; i <= 24; ++i) {
              const double x = s.canvas.x_min + step * i;
              const double y = s.target.slope * x + s.target.intercept;
              if (y >= s.canvas.y_min && y <= s.canvas.y_max) inside.push_back({x, y});
            }
            if (inside.size() < 2) throw Error(errc::kInvalidSpec, "target line misses the canvas");
            return json{inside.front(), inside.back()};
          },
          [&](const ConstraintSpec&) -> json {
            throw Error(errc::kInvalidSpec, "part " + part.id + " needs a model_answer");
          },
      },
      part.spec);
}

std::vector<std::string> answer_strings(const InstancePart& part) {
  std::set<std::string> out;
  auto add_json = [&](const json& j, auto&& self) -> void {
    if (j.is_string()) {
      out.insert(j.get<std::string>());
    } else if (j.is_number()) {
      out.insert(j.dump());
      out.insert(fmt::format("{}", j.get<double>()));
    } else if (j.is_array() || j.is_object()) {
      if (j.is_array() && j.size() == 2 && j[0].is_number()) out.insert(j.dump());
      for (const auto& v : j) self(v, self);
    }
  };
  if (!part.model_answer.is_null()) add_json(part.model_answer, add_json);
  try {
    add_json(reference_response(part), add_json);
  } catch (const Error&) {
  }
  std::visit(overloaded{
                 [&](const StructuralPolynomialSpec& s) {
                   out.insert(render(s.expected));
                   out.insert(render(to_polynomial_nf(s.expected).to_expr()));
                 },
                 [&](const EquivalenceSpec& s) { out.insert(render(s.expected)); },
                 [&](const AntiderivativeSpec&) {},
                 [&](const NumericMultiSpec& s) {
                   for (double a : s.accepted) {
                     out.insert(json(a).dump());
                     out.insert(fmt::format("{}", a));
                   }
                 },
                 [&](const ChoiceSpec& s) {
                   for (const auto& id : s.correct) {
                     out.insert(id);
                     for (const auto& o : part.options) {
                       if (o.id == id) out.insert(o.label);
                     }
                   }
                 },
                 [&](const LineSketchSpec& s) {
                   for (double v : {s.target.slope, s.target.intercept}) {
                     out.insert(json(v).dump());
                     out.insert(fmt::format("{}", v));
                   }
                 },
                 [&](const ConstraintSpec&) {},
             },
             part.spec);
  out.erase("");
  return {out.begin(), out.end()};
}

}  // namespace prepmark
