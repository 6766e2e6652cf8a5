#include <sstream>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "../support/fixtures.hpp"
#include "prepmark/cli.hpp"
#include "prepmark/ingest.hpp"
#include "prepmark/service.hpp"
#include "prepmark/store.hpp"

namespace prepmark {
namespace {

using testing::TempDir;

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> v;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

// A seed whose instance is (a - 1)^4.
std::uint64_t example_a_seed() {
  const QuestionTemplate& t = testing::seed_bank()->find("expand_binomial_A");
  for (std::uint64_t seed = 0;; ++seed) {
    const QuestionInstance inst = instantiate(t, seed);
    if (inst.params.at("k") == 1 && inst.params.at("n") == 4) return seed;
  }
}

TEST(CliValidate, ExitCodes) {
  EXPECT_EQ(run({"validate", "--bank", testing::data_path("seed_bank.json")}).code, kExitOk);

  TempDir tmp;
  json doc = json::parse(read_text_file(testing::data_path("seed_bank.json")));
  for (auto& t : doc["templates"]) {
    if (t["id"] == "expand_binomial_A") t["parts"][0]["spec"]["expected"] = "(a-{k}";
  }
  write_text_file((tmp / "bad.json").string(), doc.dump());
  const CliRun bad = run({"validate", "--bank", (tmp / "bad.json").string()});
  EXPECT_EQ(bad.code, kExitFindings);
  EXPECT_NE(bad.out.find("position"), std::string::npos);

  EXPECT_EQ(run({"validate", "--bank", (tmp / "missing.json").string()}).code, kExitUsage);
  EXPECT_EQ(run({"validate"}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);

  const CliRun j = run({"validate", "--bank", testing::data_path("seed_bank.json"), "--json"});
  EXPECT_TRUE(json::parse(j.out)["ok"]);
}

TEST(CliGrade, ExampleARows) {
  TempDir tmp;
  const std::uint64_t seed = example_a_seed();
  std::string input;
  for (const char* response : {"a^4-4a^3+6a^2-4a+1", "1-4a+6a^2-4a^3+a^4", "(a-1)^4", "a^4-4a^3+6a^2-4a+2"}) {
    input += json{{"student", "s1"}, {"template", "expand_binomial_A"}, {"part", "a"},
                  {"response", response}, {"seed", seed}}.dump() + "\n";
  }
  write_text_file((tmp / "r.jsonl").string(), input);
  const CliRun r = run({"grade", "--bank", testing::data_path("seed_bank.json"), "--responses",
                     (tmp / "r.jsonl").string()});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], "student,template,part,score,correct,feedback_key,flags");
  EXPECT_EQ(rows[1], "s1,expand_binomial_A,expand_binomial_A.a,1,true,correct,");
  EXPECT_EQ(rows[2], "s1,expand_binomial_A,expand_binomial_A.a,1,true,correct,");
  EXPECT_EQ(rows[3], "s1,expand_binomial_A,expand_binomial_A.a,0,false,right_value_wrong_form,right_value_wrong_form");
  EXPECT_EQ(rows[4].rfind("s1,expand_binomial_A,expand_binomial_A.a,0,false,incorrect", 0), 0u) << rows[4];

  // deterministic
  EXPECT_EQ(run({"grade", "--bank", testing::data_path("seed_bank.json"), "--responses",
                 (tmp / "r.jsonl").string()}).out,
            r.out);
}

TEST(CliGrade, EmptyFileGivesHeaderOnly) {
  TempDir tmp;
  write_text_file((tmp / "empty.jsonl").string(), "");
  const CliRun r = run({"grade", "--bank", testing::data_path("seed_bank.json"), "--responses",
                     (tmp / "empty.jsonl").string()});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out, "student,template,part,score,correct,feedback_key,flags\n");
}

TEST(CliGrade, BadRowsAreFindings) {
  TempDir tmp;
  write_text_file((tmp / "r.jsonl").string(),
                  R"({"student":"s1","template":"nope","part":"a","response":"1"})" "\n"
                  R"({"student":"s1","template":"rational_numbers_D","part":"a","response":["zzz"]})" "\n");
  const CliRun r = run({"grade", "--bank", testing::data_path("seed_bank.json"), "--responses",
                     (tmp / "r.jsonl").string()});
  EXPECT_EQ(r.code, kExitFindings);
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NE(rows[1].find("invalid_response"), std::string::npos);
  EXPECT_NE(rows[2].find("invalid_response"), std::string::npos);
  write_text_file((tmp / "broken.jsonl").string(), "{not json\n");
  EXPECT_NE(run({"grade", "--bank", testing::data_path("seed_bank.json"), "--responses",
                 (tmp / "broken.jsonl").string()}).code,
            kExitOk);
}

class CliStoreTest : public ::testing::Test {
 protected:
  fs::path store() const { return tmp_ / "store"; }
  TempDir tmp_;
};

TEST_F(CliStoreTest, ReportMatchesTheServiceBody) {
  init_store(store(), testing::data_path("seed_bank.json"), testing::data_path("cohort.json"));
  {
    Store s(store());
    s.enroll("alice", "tok-a", 0);
    s.enroll("bob", "tok-b", 0);
    const StartedAttempt a = s.start_attempt("alice", Topic::Numbers, parse_timestamp("2017-10-02"));
    s.submit(a.attempt_id, {}, parse_timestamp("2017-10-03"));
  }
  const CliRun early = run({"report", "--store", store().string(), "--followup", "--now", "2017-10-01T00:00:00Z"});
  EXPECT_EQ(early.code, kExitFindings);
  EXPECT_NE(early.err.find("NotYetDue"), std::string::npos);

  const CliRun due = run({"report", "--store", store().string(), "--followup", "--now", "2017-10-07T00:00:00Z"});
  ASSERT_EQ(due.code, kExitOk) << due.err;
  Store s(store());
  Api api(s, "", [] { return parse_timestamp("2017-10-07T00:00:00Z"); });
  EXPECT_EQ(due.out, api.handle({"GET", "/api/v1/reports/followup", "", ""}).body);
  EXPECT_EQ(json::parse(due.out)["rows"].size(), 12u);

  // read-only replay works while the store is open elsewhere
  const CliRun status = run({"report", "--store", store().string(), "--status"});
  ASSERT_EQ(status.code, kExitOk);
  EXPECT_EQ(status.out, api.handle({"GET", "/api/v1/reports/status", "", ""}).body);
  EXPECT_EQ(run({"report", "--store", store().string()}).code, kExitUsage);
}

// Student i passes i topics outright and nothing else: EPT i/6, tariff 20i,
// exam average 40 + 10i. Every predictor is exactly affine in the outcome.
TEST_F(CliStoreTest, AnalyzeNoiselessCohort) {
  init_store(store(), testing::data_path("seed_bank.json"), testing::data_path("cohort.json"));
  std::string marks = "student_id,module,mark\n", quals = "student_id,kind,subject_tag,grade\n";
  {
    Store s(store(), {.fsync = false});
    const auto topics = s.cohort().subtests;
    for (int i = 0; i <= 6; ++i) {
      const std::string who = "s" + std::to_string(i);
      s.enroll(who, "t" + who, 0);
      for (int k = 0; k < i; ++k) {
        const StartedAttempt a = s.start_attempt(who, topics[k].topic, 10);
        std::map<std::string, json> r;
        s.read([&](const Session& ss) {
          for (const auto& q : a.questions) {
            for (const auto& p : q.parts) r[p.id] = reference_response(ss.instance_part(who, p.id));
          }
          return 0;
        });
        s.submit(a.attempt_id, r, 20);
      }
      marks += fmt::format("{},M1,{}\n{},M2,{}\n", who, 35 + 10 * i, who, 45 + 10 * i);
      for (int k = 0; k < i; ++k) quals += who + ",AS-level,maths,A\n";
    }
    s.enroll("late", "tlate", 0);
    marks += "late,M1,50\nlate,M2,\n";
  }
  write_text_file((tmp_ / "marks.csv").string(), marks);
  write_text_file((tmp_ / "quals.csv").string(), quals);
  const CliRun r = run({"analyze", "--store", store().string(), "--marks", (tmp_ / "marks.csv").string(), "--quals",
                     (tmp_ / "quals.csv").string(), "--tariff", testing::data_path("tariff.json")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto out = lines(r.out);
  ASSERT_GE(out.size(), 6u);
  int perfect = 0;
  for (const auto& l : out) perfect += l.size() > 4 && l.substr(l.size() - 4) == "1.00";
  EXPECT_EQ(perfect, 3) << r.out;
  EXPECT_NE(r.out.find("lambda = "), std::string::npos);
  EXPECT_NE(r.out.find("students included: 7, excluded: 1"), std::string::npos);
  EXPECT_EQ(parse_scatter(read_text_file((store() / "scatter.csv").string())).size(), 7u);

  // without ingest files in the store
  EXPECT_EQ(run({"analyze", "--store", store().string()}).code, kExitFindings);
}

TEST_F(CliStoreTest, SimulateIsDeterministicPerSeed) {
  auto sim = [&](const std::string& name, const std::string& seed) {
    const CliRun r = run({"simulate", "--bank", testing::data_path("seed_bank.json"), "--cohort",
                       testing::data_path("cohort.json"), "--store", (tmp_ / name).string(), "--students",
                       "30", "--seed", seed, "--tariff", testing::data_path("tariff.json")});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    return read_text_file((tmp_ / name / "events.jsonl").string()) +
           read_text_file((tmp_ / name / "ingest" / "marks.csv").string());
  };
  const std::string a = sim("a", "7"), b = sim("b", "7"), c = sim("c", "8");
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_EQ(run({"verify", "--store", (tmp_ / "a").string()}).code, kExitOk);
  const CliRun status = run({"report", "--store", (tmp_ / "a").string(), "--status"});
  EXPECT_EQ(json::parse(status.out)["students"].size(), 30u);
  const CliRun analyze = run({"analyze", "--store", (tmp_ / "a").string(), "--json"});
  EXPECT_EQ(analyze.code, kExitOk) << analyze.err;
  EXPECT_GT(json::parse(analyze.out)["rows"][0]["r"].get<double>(), 0.0);
  // a second run into a used store is refused
  EXPECT_EQ(run({"simulate", "--bank", testing::data_path("seed_bank.json"), "--cohort",
                 testing::data_path("cohort.json"), "--store", (tmp_ / "a").string()}).code,
            kExitFindings);
}

TEST_F(CliStoreTest, EnrollAndVerify) {
  init_store(store(), testing::data_path("seed_bank.json"), testing::data_path("cohort.json"));
  write_text_file((tmp_ / "roster.txt").string(), "alice,tok-a\nbob\n");
  const CliRun r = run({"enroll", "--store", store().string(), "--roster", (tmp_ / "roster.txt").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto out = lines(r.out);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[1], "alice,tok-a");
  EXPECT_EQ(out[2].rfind("bob,", 0), 0u);
  EXPECT_EQ(run({"verify", "--store", store().string()}).code, kExitOk);
  write_text_file((store() / "snapshot.json").string(), "{}\n");
  EXPECT_EQ(run({"verify", "--store", store().string()}).code, kExitFindings);
}

}  // namespace
}  // namespace prepmark
