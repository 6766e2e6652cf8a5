#include <cstdlib>
#include <thread>

#include <gtest/gtest.h>

#include "httplib.h"

#include "../support/fixtures.hpp"
#include "prepmark/ingest.hpp"
#include "prepmark/service.hpp"
#include "prepmark/simulate.hpp"

namespace prepmark {
namespace {

using testing::TempDir;

const Timestamp kDeadline = parse_timestamp("2017-10-06T17:00:00Z");

class ApiTest : public ::testing::Test {
 protected:
  void SetUp() override {
    init_store(tmp_ / "store", testing::data_path("seed_bank.json"), testing::data_path("cohort.json"));
    store_ = std::make_unique<Store>(tmp_ / "store", StoreOptions{.fsync = false});
    store_->enroll("alice", "tok-alice", now_ - 100);
    store_->enroll("bob", "tok-bob", now_ - 100);
  }

  Api api(const std::string& admin = "secret") {
    return Api(*store_, admin, [this] { return now_; });
  }

  static ApiRequest get(const std::string& path, const std::string& token = {}) {
    return {"GET", path, "", token.empty() ? "" : "Bearer " + token};
  }
  static ApiRequest post(const std::string& path, const json& body, const std::string& token = {}) {
    return {"POST", path, body.dump(), token.empty() ? "" : "Bearer " + token};
  }

  static json body_of(const ApiResponse& r) { return json::parse(r.body); }

  TempDir tmp_;
  std::unique_ptr<Store> store_;
  Timestamp now_ = kDeadline - 24 * 3600;
};

TEST_F(ApiTest, ListsTheSixTests) {
  Api a = api();
  const ApiResponse r = a.handle(get("/api/v1/tests", "tok-alice"));
  ASSERT_EQ(r.status, 200);
  const json j = body_of(r);
  ASSERT_EQ(j["tests"].size(), 6u);
  std::vector<std::string> topics;
  for (const auto& t : j["tests"]) topics.push_back(t["topic"]);
  EXPECT_EQ(topics, (std::vector<std::string>{"Algebra", "Numbers", "Geometry", "Functions", "Calculus",
                                              "LogicAndSets"}));
  EXPECT_EQ(j["pass_mark"], 0.75);
  EXPECT_EQ(r.body.back(), '\n');

  const ApiResponse one = a.handle(get("/api/v1/tests/Calculus", "tok-alice"));
  EXPECT_EQ(one.status, 200);
  EXPECT_EQ(body_of(one)["topic"], "Calculus");
  EXPECT_EQ(a.handle(get("/api/v1/tests/Astrology", "tok-alice")).status, 404);
}

TEST_F(ApiTest, StartSubmitAndStatus) {
  Api a = api();
  const ApiResponse started = a.handle(post("/api/v1/tests/Algebra/attempts", json::object(), "tok-alice"));
  ASSERT_EQ(started.status, 201);
  const json s = body_of(started);
  const std::string id = s["attempt"];
  EXPECT_EQ(a.handle(post("/api/v1/tests/Algebra/attempts", json::object(), "tok-alice")).status, 200);

  json responses = json::object();
  store_->read([&](const Session& ss) {
    for (const auto& q : s["questions"]) {
      for (const auto& p : q["parts"]) {
        responses[p["id"].get<std::string>()] = reference_response(ss.instance_part("alice", p["id"]));
      }
    }
    return 0;
  });
  // malformed input is feedback, not an HTTP error
  responses["expand_binomial_A.a"] = "3x + * 2";
  const ApiResponse fb = a.handle(post("/api/v1/attempts/" + id + "/submit", {{"responses", responses}}, "tok-alice"));
  ASSERT_EQ(fb.status, 200) << fb.body;
  const json f = body_of(fb);
  bool saw_parse_error = false;
  for (const auto& p : f["parts"]) saw_parse_error |= p["feedback_key"] == "parse_error";
  EXPECT_TRUE(saw_parse_error);
  EXPECT_EQ(a.handle(post("/api/v1/attempts/" + id + "/submit", {{"responses", responses}}, "tok-alice")).status,
            409);

  const ApiResponse st = a.handle(get("/api/v1/students/alice/status", "tok-alice"));
  ASSERT_EQ(st.status, 200);
  EXPECT_EQ(body_of(st)["topics"][0]["attempts"], 1);
}

TEST_F(ApiTest, ErrorStatusesAndBodies) {
  Api a = api();
  const ApiResponse bad = a.handle(post("/api/v1/attempts/att-1/submit", json::object(), "tok-alice"));
  EXPECT_EQ(bad.status, 404);
  EXPECT_EQ(body_of(bad)["error"]["code"], "UnknownAttempt");
  EXPECT_EQ(a.handle({"POST", "/api/v1/tests/Algebra/attempts", "{not json", "Bearer tok-alice"}).status, 400);
  EXPECT_EQ(a.handle(get("/api/v1/nowhere", "tok-alice")).status, 404);
  const std::string id = body_of(a.handle(post("/api/v1/tests/Algebra/attempts", json::object(), "tok-alice")))["attempt"];
  EXPECT_EQ(a.handle(post("/api/v1/attempts/" + id + "/submit", {{"answers", 1}}, "tok-alice")).status, 422);
  EXPECT_EQ(a.handle(post("/api/v1/attempts/" + id + "/submit", {{"responses", {{"bogus.a", "1"}}}}, "tok-alice")).status,
            422);
  EXPECT_EQ(http_status_for("NotYetDue"), 409);
  EXPECT_EQ(http_status_for("DuplicateStudent"), 409);
  EXPECT_EQ(http_status_for("DegenerateSample"), 422);
  EXPECT_EQ(http_status_for("Whatever"), 500);
}

TEST_F(ApiTest, Authentication) {
  Api a = api();
  EXPECT_EQ(a.handle(get("/api/v1/students/alice/status")).status, 401);
  EXPECT_EQ(a.handle(get("/api/v1/students/alice/status", "bogus")).status, 401);
  EXPECT_EQ(a.handle({"GET", "/api/v1/tests", "", "Basic abc"}).status, 401);
  EXPECT_EQ(a.handle(get("/api/v1/students/alice/status", "tok-bob")).status, 403);
  EXPECT_EQ(a.handle(get("/api/v1/students/alice/status", "secret")).status, 200);
  EXPECT_EQ(a.handle(get("/api/v1/reports/status", "tok-bob")).status, 403);
  EXPECT_EQ(a.handle(get("/api/v1/reports/status")).status, 401);
  EXPECT_EQ(a.handle(get("/api/v1/reports/status", "secret")).status, 200);
  EXPECT_EQ(a.handle(post("/api/v1/tests/Algebra/attempts", json::object())).status, 401);

  const std::string id = body_of(a.handle(post("/api/v1/tests/Algebra/attempts", json::object(), "tok-alice")))["attempt"];
  EXPECT_EQ(a.handle(post("/api/v1/attempts/" + id + "/submit", {{"responses", json::object()}}, "tok-bob")).status, 403);
  EXPECT_EQ(a.handle(post("/api/v1/attempts/" + id + "/submit", {{"responses", json::object()}})).status, 401);
}

TEST_F(ApiTest, OpenModeWithoutAdminToken) {
  Api a = api("");
  EXPECT_EQ(a.handle(get("/api/v1/reports/status")).status, 200);
  const ApiResponse started = a.handle(post("/api/v1/tests/Numbers/attempts", {{"student", "bob"}}));
  EXPECT_EQ(started.status, 201);
  EXPECT_EQ(body_of(started)["student"], "bob");
  EXPECT_EQ(a.handle(get("/api/v1/students/alice/status", "tok-bob")).status, 403);
}

TEST_F(ApiTest, Enrolment) {
  Api a = api();
  const ApiResponse r = a.handle(post("/api/v1/students", {{"student", "carol"}}, "secret"));
  ASSERT_EQ(r.status, 201);
  const std::string token = body_of(r)["token"];
  EXPECT_FALSE(token.empty());
  EXPECT_EQ(a.handle(get("/api/v1/students/carol/status", token)).status, 200);
  EXPECT_EQ(a.handle(post("/api/v1/students", {{"student", "carol"}}, "secret")).status, 409);
  EXPECT_EQ(a.handle(post("/api/v1/students", {{"student", "dave"}}, "tok-bob")).status, 403);
}

TEST_F(ApiTest, FollowUpReportRespectsTheDeadline) {
  Api a = api();
  const ApiResponse early = a.handle(get("/api/v1/reports/followup", "secret"));
  EXPECT_EQ(early.status, 409);
  EXPECT_EQ(body_of(early)["error"]["code"], "NotYetDue");
  now_ = kDeadline;
  const ApiResponse due = a.handle(get("/api/v1/reports/followup", "secret"));
  ASSERT_EQ(due.status, 200);
  EXPECT_EQ(due.body, store_->read([&](const Session& s) { return followup_body(s, kDeadline); }));
  EXPECT_EQ(body_of(due)["rows"].size(), 12u);
}

TEST_F(ApiTest, AnalyticsNeedIngestFiles) {
  Api a = api();
  EXPECT_EQ(a.handle(get("/api/v1/analytics/correlations", "secret")).status, 404);

  TempDir sim;
  init_store(sim / "store", testing::data_path("seed_bank.json"), testing::data_path("cohort.json"));
  Store s(sim / "store", {.fsync = false, .snapshot_every = 0});
  SimulationConfig cfg;
  cfg.students = 40;
  write_ingest_files(s, simulate(s, cfg));
  fs::copy_file(testing::data_path("tariff.json"), s.layout().tariff());
  Api b(s, "secret", [] { return kDeadline; });
  const ApiResponse c = b.handle(get("/api/v1/analytics/correlations", "secret"));
  ASSERT_EQ(c.status, 200) << c.body;
  const json j = body_of(c);
  EXPECT_EQ(j["rows"].size(), 3u);
  EXPECT_EQ(j["included"].get<int>() + j["excluded"].get<int>(), 40);
  EXPECT_TRUE(j.contains("table"));
  const ApiResponse sc = b.handle(get("/api/v1/analytics/scatter", "secret"));
  EXPECT_EQ(sc.content_type, "text/csv");
  EXPECT_EQ(parse_scatter(sc.body).size(), j["included"].get<std::size_t>());
}

TEST_F(ApiTest, ExpressionPreview) {
  Api a = api();
  const json ok = body_of(a.handle(post("/api/v1/preview", {{"expression", "2x^2 + 1"}})));
  EXPECT_TRUE(ok["ok"]);
  EXPECT_FALSE(ok["rendered"].get<std::string>().empty());
  const json bad = body_of(a.handle(post("/api/v1/preview", {{"expression", "(x - 1"}})));
  EXPECT_FALSE(bad["ok"]);
  EXPECT_TRUE(bad.contains("offset"));
}

TEST(ServiceConfig, FileAndEnvironment) {
  TempDir tmp;
  write_text_file((tmp / "svc.json").string(),
                  R"({"store":"st","bank":"b.json","bind":"0.0.0.0:9000","admin_token":"x"})");
  ServiceConfig c = load_service_config((tmp / "svc.json").string());
  EXPECT_EQ(c.store, (tmp / "st").string());
  EXPECT_EQ(c.bank, (tmp / "b.json").string());
  EXPECT_EQ(c.bind, "0.0.0.0:9000");
  ::setenv("PREPMARK_BIND", "127.0.0.1:1234", 1);
  c = load_service_config((tmp / "svc.json").string());
  ::unsetenv("PREPMARK_BIND");
  EXPECT_EQ(c.bind, "127.0.0.1:1234");
}

TEST(Server, ServesOverHttp) {
  TempDir tmp;
  ServiceConfig c;
  c.store = (tmp / "store").string();
  c.bank = testing::data_path("seed_bank.json");
  c.cohort = testing::data_path("cohort.json");
  c.bind = "127.0.0.1:0";
  c.admin_token = "secret";
  Server server(c, [] { return kDeadline - 3600; });
  const int port = server.bind();
  ASSERT_GT(port, 0);
  std::thread t([&] { server.run(); });

  httplib::Client client("127.0.0.1", port);
  const httplib::Headers admin{{"Authorization", "Bearer secret"}};
  auto enrolled = client.Post("/api/v1/students", admin, R"({"student":"zoe","token":"tok-z"})",
                              "application/json");
  ASSERT_TRUE(enrolled);
  EXPECT_EQ(enrolled->status, 201);
  const httplib::Headers zoe{{"Authorization", "Bearer tok-z"}};
  auto tests = client.Get("/api/v1/tests", zoe);
  ASSERT_TRUE(tests);
  EXPECT_EQ(tests->status, 200);
  EXPECT_EQ(json::parse(tests->body)["tests"].size(), 6u);
  auto started = client.Post("/api/v1/tests/Geometry/attempts", zoe, "{}", "application/json");
  ASSERT_TRUE(started);
  EXPECT_EQ(started->status, 201);
  const std::string id = json::parse(started->body)["attempt"];
  auto fb = client.Post("/api/v1/attempts/" + id + "/submit", zoe,
                        R"({"responses":{"geometry_line_C.a":"3x + * 2"}})", "application/json");
  ASSERT_TRUE(fb);
  EXPECT_EQ(fb->status, 200);
  auto early = client.Get("/api/v1/reports/followup", admin);
  ASSERT_TRUE(early);
  EXPECT_EQ(early->status, 409);
  auto anon = client.Get("/api/v1/reports/status");
  ASSERT_TRUE(anon);
  EXPECT_EQ(anon->status, 401);

  server.stop();
  t.join();
  EXPECT_EQ(server.store().event_count(), 3u);
}

}  // namespace
}  // namespace prepmark
