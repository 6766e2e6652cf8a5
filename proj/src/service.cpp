#include "prepmark/service.hpp"

#include <cstdlib>
#include <random>
#include <regex>

#include <fmt/format.h>
#include <httplib.h>

#include "prepmark/error.hpp"
#include "prepmark/expr.hpp"
#include "prepmark/ingest.hpp"

namespace prepmark {
namespace {

std::string random_token() {
  std::random_device rd;
  std::uniform_int_distribution<std::uint64_t> dist;
  return fmt::format("{:016x}{:016x}", dist(rd), dist(rd));
}

Topic topic_or_throw(const std::string& name) {
  auto t = topic_from_name(name);
  if (!t) throw Error(errc::kUnknownTopic, "unknown topic '" + name + "'");
  return *t;
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  try {
    json j = json::parse(body);
    if (!j.is_object()) throw Error(errc::kBadRequest, "request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw Error(errc::kBadRequest, std::string("malformed JSON body: ") + e.what());
  }
}

json subtest_summary(const Session& s, const Subtest& st) {
  int parts = 0;
  json questions = json::array();
  for (const auto& id : st.template_ids) {
    const QuestionTemplate& t = s.bank().find(id);
    parts += static_cast<int>(t.parts.size());
    questions.push_back({{"template", t.id},
                         {"element", element_name(t.element)},
                         {"parts", t.parts.size()}});
  }
  return json{{"topic", topic_name(st.topic)}, {"questions", questions}, {"parts", parts}};
}

json topic_status_json(const Session& s, const std::string& student, Topic topic) {
  const StudentStatus status = s.status(student);
  for (const auto& t : status_to_json(status)["topics"]) {
    if (t["topic"] == topic_name(topic)) return t;
  }
  return json();
}

}  // namespace

// ---- config -----------------------------------------------------------------------------

ServiceConfig service_config_from_json(const json& j) {
  if (!j.is_object()) throw Error(errc::kFileFormat, "service config must be an object");
  ServiceConfig c;
  try {
    c.store = j.value("store", c.store);
    c.bank = j.value("bank", c.bank);
    c.cohort = j.value("cohort", c.cohort);
    c.bind = j.value("bind", c.bind);
    c.admin_token = j.value("admin_token", c.admin_token);
  } catch (const json::exception& e) {
    throw Error(errc::kFileFormat, std::string("service config: ") + e.what());
  }
  return c;
}

ServiceConfig load_service_config(const std::string& path) {
  ServiceConfig c;
  if (!path.empty()) {
    try {
      c = service_config_from_json(json::parse(read_text_file(path)));
    } catch (const json::parse_error& e) {
      throw Error(errc::kFileFormat, path + ": " + e.what());
    }
    const fs::path base = fs::path(path).parent_path();
    for (std::string* p : {&c.store, &c.bank, &c.cohort}) {
      if (!p->empty() && fs::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
    }
  }
  const std::pair<const char*, std::string*> env[] = {{"PREPMARK_STORE", &c.store},
                                                      {"PREPMARK_BANK", &c.bank},
                                                      {"PREPMARK_COHORT", &c.cohort},
                                                      {"PREPMARK_BIND", &c.bind},
                                                      {"PREPMARK_ADMIN_TOKEN", &c.admin_token}};
  for (const auto& [name, field] : env) {
    if (const char* v = std::getenv(name)) *field = v;
  }
  return c;
}

// ---- shared bodies ------------------------------------------------------------------------

std::string json_body(const json& j) { return j.dump(2) + "\n"; }

std::string followup_body(const Session& s, Timestamp now) {
  return json_body(followup_to_json(s.follow_up_report(now)));
}

std::string status_report_body(const Session& s) {
  json students = json::array();
  for (const auto& id : s.student_ids()) students.push_back(status_to_json(s.status(id)));
  return json_body({{"ept_mode", score_mode_name(s.cohort().ept_mode)}, {"students", students}});
}

std::string tests_body(const Session& s, const std::string& student_id) {
  json tests = json::array();
  for (const auto& st : s.cohort().subtests) {
    json entry = subtest_summary(s, st);
    if (!student_id.empty()) entry["status"] = topic_status_json(s, student_id, st.topic);
    tests.push_back(std::move(entry));
  }
  return json_body({{"pass_mark", s.cohort().pass_mark},
                    {"deadline", format_timestamp(s.cohort().deadline)},
                    {"tests", tests}});
}

TariffTable store_tariff(const StoreLayout& layout) {
  if (!fs::exists(layout.tariff())) {
    throw Error(errc::kIngestMissing, "no tariff table at " + layout.tariff().string());
  }
  return load_tariff(layout.tariff().string());
}

std::vector<StudentOutcome> store_outcomes(const Session& s, const StoreLayout& layout) {
  for (const auto& p : {layout.marks(), layout.quals()}) {
    if (!fs::exists(p)) throw Error(errc::kIngestMissing, "no ingest file at " + p.string());
  }
  std::map<std::string, double> ept;
  for (const auto& id : s.student_ids()) ept[id] = s.status(id).ept_score;
  return build_outcomes(ept, parse_marks_csv(read_text_file(layout.marks().string())),
                        parse_quals_csv(read_text_file(layout.quals().string())));
}

std::string correlations_body(const Session& s, const StoreLayout& layout) {
  const auto report = correlation_report(store_outcomes(s, layout), store_tariff(layout));
  json j = correlation_to_json(report);
  j["ept_mode"] = score_mode_name(s.cohort().ept_mode);
  j["table"] = format_correlation_table(report);
  return json_body(j);
}

std::string scatter_body(const Session& s, const StoreLayout& layout) {
  return scatter_export(store_outcomes(s, layout));
}

int http_status_for(const std::string& code) {
  static const std::map<std::string, int> table{
      {errc::kNotYetDue, 409},        {errc::kNoOpenAttempt, 409},   {errc::kDuplicateStudent, 409},
      {errc::kUnknownStudent, 404},   {errc::kUnknownTopic, 404},    {errc::kUnknownAttempt, 404},
      {errc::kUnknownTemplate, 404},  {errc::kIngestMissing, 404},   {errc::kNotFound, 404},
      {errc::kArmMismatch, 422},      {errc::kUnknownOption, 422},   {errc::kInvalidArgument, 422},
      {errc::kDegenerateSample, 422}, {errc::kBadRequest, 400},      {errc::kUnauthorized, 401},
      {errc::kForbidden, 403},
  };
  auto it = table.find(code);
  return it == table.end() ? 500 : it->second;
}

json error_json(const std::string& code, const std::string& message) {
  return json{{"error", {{"code", code}, {"message", message}}}};
}

// ---- api -----------------------------------------------------------------------------------

Api::Api(Store& store, std::string admin_token, Clock clock)
    : store_(store), admin_token_(std::move(admin_token)), clock_(std::move(clock)) {}

Api::Caller Api::identify(const ApiRequest& r) const {
  Caller c;
  constexpr std::string_view kBearer = "Bearer ";
  if (r.authorization.empty()) return c;
  if (r.authorization.rfind(kBearer, 0) != 0) {
    throw Error(errc::kUnauthorized, "expected 'Authorization: Bearer <token>'");
  }
  const std::string token = r.authorization.substr(kBearer.size());
  if (!admin_token_.empty() && token == admin_token_) {
    c.admin = true;
    return c;
  }
  c.student = store_.student_for_token(token);
  if (!c.student) throw Error(errc::kUnauthorized, "unknown token");
  return c;
}

void Api::require_admin(const Caller& c) const {
  if (admin_token_.empty() || c.admin) return;
  throw Error(c.student ? errc::kForbidden : errc::kUnauthorized, "this endpoint needs the admin token");
}

std::string Api::require_student(const Caller& c, const json& body) const {
  if (c.student) return *c.student;
  if (c.admin || admin_token_.empty()) {
    if (body.contains("student") && body["student"].is_string()) return body["student"].get<std::string>();
    throw Error(errc::kInvalidArgument, "name the student in the body or use a student token");
  }
  throw Error(errc::kUnauthorized, "a student token is required");
}

ApiResponse Api::handle(const ApiRequest& r) {
  static const std::regex kTopic(R"(/api/v1/tests/([^/]+))");
  static const std::regex kStart(R"(/api/v1/tests/([^/]+)/attempts)");
  static const std::regex kSubmit(R"(/api/v1/attempts/([^/]+)/submit)");
  static const std::regex kStatus(R"(/api/v1/students/([^/]+)/status)");

  auto ok = [](const std::string& body, int status = 200) { return ApiResponse{status, body}; };
  std::smatch m;
  try {
    const Caller caller = identify(r);
    auto own = [&](const std::string& student) {
      if (caller.admin || (admin_token_.empty() && !caller.student)) return;
      if (!caller.student) throw Error(errc::kUnauthorized, "a token is required");
      if (caller.student != student) throw Error(errc::kForbidden, "not your record");
    };

    if (r.method == "GET" && r.path == "/api/v1/tests") {
      return ok(store_.read([&](const Session& s) { return tests_body(s, caller.student.value_or("")); }));
    }
    if (r.method == "GET" && std::regex_match(r.path, m, kTopic)) {
      const Topic topic = topic_or_throw(m[1]);
      return ok(store_.read([&](const Session& s) {
        json j = subtest_summary(s, s.cohort().subtest(topic));
        j["pass_mark"] = s.cohort().pass_mark;
        j["deadline"] = format_timestamp(s.cohort().deadline);
        if (caller.student) j["status"] = topic_status_json(s, *caller.student, topic);
        return json_body(j);
      }));
    }
    if (r.method == "POST" && std::regex_match(r.path, m, kStart)) {
      const Topic topic = topic_or_throw(m[1]);
      const std::string student = require_student(caller, parse_body(r.body));
      const StartedAttempt a = store_.start_attempt(student, topic, clock_());
      return ok(json_body(started_to_json(a)), a.resumed ? 200 : 201);
    }
    if (r.method == "POST" && std::regex_match(r.path, m, kSubmit)) {
      const std::string attempt = m[1];
      own(store_.student_for_attempt(attempt));
      const json body = parse_body(r.body);
      if (!body.contains("responses") || !body["responses"].is_object()) {
        throw Error(errc::kInvalidArgument, "body needs a 'responses' object keyed by part id");
      }
      std::map<std::string, json> responses;
      for (const auto& [k, v] : body["responses"].items()) responses.emplace(k, v);
      return ok(json_body(feedback_to_json(store_.submit(attempt, responses, clock_()))));
    }
    if (r.method == "GET" && std::regex_match(r.path, m, kStatus)) {
      const std::string student = m[1];
      own(student);
      return ok(json_body(status_to_json(store_.status(student))));
    }
    if (r.method == "POST" && r.path == "/api/v1/students") {
      require_admin(caller);
      const json body = parse_body(r.body);
      if (!body.contains("student") || !body["student"].is_string()) {
        throw Error(errc::kInvalidArgument, "body needs a 'student' string");
      }
      const std::string token = body.value("token", random_token());
      store_.enroll(body["student"].get<std::string>(), token, clock_());
      return ok(json_body({{"student", body["student"]}, {"token", token}}), 201);
    }
    if (r.method == "GET" && r.path == "/api/v1/reports/followup") {
      require_admin(caller);
      const Timestamp now = clock_();
      return ok(store_.read([&](const Session& s) { return followup_body(s, now); }));
    }
    if (r.method == "GET" && r.path == "/api/v1/reports/status") {
      require_admin(caller);
      return ok(store_.read([&](const Session& s) { return status_report_body(s); }));
    }
    if (r.method == "GET" && r.path == "/api/v1/analytics/correlations") {
      require_admin(caller);
      return ok(store_.read([&](const Session& s) { return correlations_body(s, store_.layout()); }));
    }
    if (r.method == "GET" && r.path == "/api/v1/analytics/scatter") {
      require_admin(caller);
      ApiResponse resp = ok(store_.read([&](const Session& s) { return scatter_body(s, store_.layout()); }));
      resp.content_type = "text/csv";
      return resp;
    }
    if (r.method == "POST" && r.path == "/api/v1/preview") {
      const json body = parse_body(r.body);
      if (!body.contains("expression") || !body["expression"].is_string()) {
        throw Error(errc::kInvalidArgument, "body needs an 'expression' string");
      }
      try {
        const Expr e = parse(body["expression"].get<std::string>());
        return ok(json_body({{"ok", true}, {"rendered", render(e)}}));
      } catch (const SyntaxError& e) {
        return ok(json_body({{"ok", false}, {"offset", e.offset()}, {"message", e.what()}}));
      }
    }
    throw Error(errc::kNotFound, r.method + " " + r.path + " is not an endpoint");
  } catch (const Error& e) {
    return ApiResponse{http_status_for(e.code()), json_body(error_json(e.code(), e.what()))};
  } catch (const std::exception& e) {
    return ApiResponse{500, json_body(error_json("InternalError", e.what()))};
  }
}

// ---- http server -------------------------------------------------------------------------

struct Server::Impl {
  ServiceConfig config;
  std::unique_ptr<Store> store;
  std::unique_ptr<Api> api;
  httplib::Server http;
  std::string host;
  int port = 0;
};

Server::Server(const ServiceConfig& config, Api::Clock clock) : impl_(std::make_unique<Impl>()) {
  impl_->config = config;
  const auto colon = config.bind.rfind(':');
  if (colon == std::string::npos) throw Error(errc::kInvalidArgument, "bind must be host:port");
  impl_->host = config.bind.substr(0, colon);
  try {
    impl_->port = std::stoi(config.bind.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(errc::kInvalidArgument, "bad port in bind address '" + config.bind + "'");
  }
  if (!config.bank.empty() || !config.cohort.empty()) {
    if (config.bank.empty() || config.cohort.empty()) {
      throw Error(errc::kInvalidArgument, "bank and cohort must be given together");
    }
    init_store(config.store, config.bank, config.cohort);
  }
  impl_->store = std::make_unique<Store>(config.store);
  impl_->api = std::make_unique<Api>(*impl_->store, config.admin_token, std::move(clock));

  auto forward = [this](const httplib::Request& req, httplib::Response& res) {
    ApiRequest r{req.method, req.path, req.body, req.get_header_value("Authorization")};
    const ApiResponse out = impl_->api->handle(r);
    res.status = out.status;
    res.set_content(out.body, out.content_type.c_str());
  };
  impl_->http.Get(R"(/api/v1/.*)", forward);
  impl_->http.Post(R"(/api/v1/.*)", forward);
}

Server::~Server() = default;

int Server::bind() {
  if (impl_->port == 0) {
    impl_->port = impl_->http.bind_to_any_port(impl_->host);
    if (impl_->port < 0) throw Error(errc::kIo, "cannot bind " + impl_->host);
  } else if (!impl_->http.bind_to_port(impl_->host, impl_->port)) {
    throw Error(errc::kIo, "cannot bind " + impl_->config.bind);
  }
  return impl_->port;
}

void Server::run() { impl_->http.listen_after_bind(); }

void Server::stop() { impl_->http.stop(); }

Store& Server::store() { return *impl_->store; }

}  // namespace prepmark
