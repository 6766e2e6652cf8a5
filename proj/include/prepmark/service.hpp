#pragma once

#include <functional>
#include <map>
#include <string>

#include "prepmark/analytics.hpp"
#include "prepmark/store.hpp"

namespace prepmark {

struct ServiceConfig {
  std::string store = "store";
  std::string bank;    // copied into a new store; optional for an existing one
  std::string cohort;  // likewise
  std::string bind = "127.0.0.1:8080";
  std::string admin_token;  // empty: report and analytics endpoints are open
};

// Keys: store, bank, cohort, bind, admin_token. Relative paths resolve
// against the config file's directory.
ServiceConfig service_config_from_json(const json& j);
// Loads the file (if path is non-empty), then applies PREPMARK_STORE,
// PREPMARK_BANK, PREPMARK_COHORT, PREPMARK_BIND and PREPMARK_ADMIN_TOKEN.
ServiceConfig load_service_config(const std::string& path);

// Report bodies shared by the HTTP endpoints and the CLI.
std::string json_body(const json& j);
std::string followup_body(const Session& s, Timestamp now);  // NotYetDue
std::string status_report_body(const Session& s);
std::string tests_body(const Session& s, const std::string& student_id = {});

// Analytics over the store's ingest files (marks.csv, quals.csv,
// tariff.json). IngestMissing if any is absent.
std::vector<StudentOutcome> store_outcomes(const Session& s, const StoreLayout& layout);
TariffTable store_tariff(const StoreLayout& layout);
std::string correlations_body(const Session& s, const StoreLayout& layout);
std::string scatter_body(const Session& s, const StoreLayout& layout);

int http_status_for(const std::string& code);
json error_json(const std::string& code, const std::string& message);

struct ApiRequest {
  std::string method;
  std::string path;
  std::string body;
  std::string authorization;  // raw Authorization header
};

struct ApiResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// The /api/v1 surface, independent of the transport.
///
/// Students authenticate with "Authorization: Bearer <token>". With an admin
/// token configured, reports, analytics and enrolment require it; the admin
/// token also grants access to every student.
class Api {
 public:
  using Clock = std::function<Timestamp()>;

  Api(Store& store, std::string admin_token = {}, Clock clock = now_utc);

  ApiResponse handle(const ApiRequest& request);

 private:
  struct Caller {
    std::optional<std::string> student;
    bool admin = false;
  };

  Caller identify(const ApiRequest& r) const;
  void require_admin(const Caller& c) const;
  std::string require_student(const Caller& c, const json& body) const;

  Store& store_;
  std::string admin_token_;
  Clock clock_;
};

/// Runs the HTTP server until stop() or a signal. Startup errors throw.
class Server {
 public:
  explicit Server(const ServiceConfig& config, Api::Clock clock = now_utc);
  ~Server();

  // Binds; port 0 picks a free port. Returns the bound port.
  int bind();
  void run();   // blocks
  void stop();
  Store& store();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace prepmark
