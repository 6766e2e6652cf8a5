#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "prepmark/analytics.hpp"
#include "prepmark/error.hpp"
#include "prepmark/ingest.hpp"

namespace prepmark {
namespace {

TariffTable seed_tariff() { return load_tariff(testing::data_path("tariff.json")); }

std::vector<std::pair<double, double>> random_pairs(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> slope(-2.0, 2.0);
  const double b = slope(rng);
  std::vector<std::pair<double, double>> p;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = 50 + 10 * z(rng);
    p.emplace_back(x, b * x + 5 * z(rng));
  }
  return p;
}

TEST(Pearson, PerfectLinearRelations) {
  PairedSample up, down;
  for (int i = 0; i < 20; ++i) {
    up.pairs.emplace_back(i, 3.0 * i + 7);
    down.pairs.emplace_back(i, -0.5 * i + 2);
  }
  EXPECT_NEAR(pearson(up), 1.0, 1e-12);
  EXPECT_NEAR(pearson(down), -1.0, 1e-12);
}

TEST(Pearson, MatchesTwoPassOracle) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> size(3, 200);
  for (int trial = 0; trial < 1000; ++trial) {
    PairedSample s;
    s.pairs = random_pairs(rng, size(rng));
    ASSERT_NEAR(pearson(s), oracle::pearson_two_pass(s.pairs), 1e-12) << "trial " << trial;
  }
}

TEST(Pearson, InvariantUnderPositiveAffineMaps) {
  std::mt19937_64 rng(7);
  PairedSample s;
  s.pairs = random_pairs(rng, 60);
  PairedSample t = s;
  for (auto& [x, y] : t.pairs) {
    x = 3.5 * x - 20;
    y = 0.25 * y + 1000;
  }
  EXPECT_NEAR(pearson(s), pearson(t), 1e-12);
  PairedSample flipped = s;
  for (auto& [x, y] : flipped.pairs) x = -x;
  EXPECT_NEAR(pearson(s), -pearson(flipped), 1e-12);
}

TEST(Pearson, DegenerateSamplesThrow) {
  auto code = [](PairedSample s) {
    try {
      pearson(s);
    } catch (const Error& e) {
      return e.code();
    }
    return std::string();
  };
  EXPECT_EQ(code({{{1, 2}, {2, 3}}}), errc::kDegenerateSample);
  EXPECT_EQ(code({{{1, 2}, {1, 3}, {1, 4}}}), errc::kDegenerateSample);
  EXPECT_EQ(code({{{1, 2}, {2, 2}, {3, 2}}}), errc::kDegenerateSample);
  EXPECT_EQ(code({{{1, 2}, {2, NAN}, {3, 4}}}), errc::kDegenerateSample);
  const std::vector<double> x{1, 2, 3}, y{2, 4, 7};
  EXPECT_NEAR(pearson(x, y), oracle::pearson_two_pass({{1, 2}, {2, 4}, {3, 7}}), 1e-12);
  EXPECT_THROW(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2}), Error);
}

TEST(Tariff, SeedTableValues) {
  const TariffTable t = seed_tariff();
  EXPECT_EQ(t.points("A-level", "A*"), 56);
  EXPECT_GT(t.points("A-level", "A"), t.points("A-level", "B"));
  EXPECT_THROW(t.points("A-level", "Z"), Error);
  EXPECT_THROW(t.points("Diploma", "A"), Error);
}

TEST(Tariff, TotalAndMathsOnly) {
  const TariffTable t = seed_tariff();
  StudentOutcome s;
  s.qualifications = {{"A-level", SubjectTag::Maths, "A*"},
                      {"A-level", SubjectTag::FurtherMaths, "A"},
                      {"A-level", SubjectTag::Other, "B"},
                      {"AS-level", SubjectTag::Other, "C"}};
  const int a_star = t.points("A-level", "A*"), a = t.points("A-level", "A");
  EXPECT_EQ(maths_only_tariff(s, t), a_star + a);
  EXPECT_EQ(total_tariff(s, t), a_star + a + t.points("A-level", "B") + t.points("AS-level", "C"));
  StudentOutcome none;
  EXPECT_EQ(total_tariff(none, t), 0);
  EXPECT_EQ(maths_only_tariff(none, t), 0);
}

TEST(Tariff, MathsOnlyNeverExceedsTotal) {
  const TariffTable t = seed_tariff();
  std::vector<std::pair<std::string, std::string>> keys;
  for (const auto& [k, v] : t.entries()) keys.push_back(k);
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    StudentOutcome s;
    const int n = static_cast<int>(rng() % 6);
    for (int q = 0; q < n; ++q) {
      const auto& [kind, grade] = keys[rng() % keys.size()];
      s.qualifications.push_back({kind, static_cast<SubjectTag>(rng() % 3), grade});
    }
    ASSERT_LE(maths_only_tariff(s, t), total_tariff(s, t));
    ASSERT_GE(maths_only_tariff(s, t), 0);
  }
}

TEST(Tariff, JsonAndSubjectTags) {
  const TariffTable t = tariff_from_json(json::parse(R"({"A-level":{"A*":56,"A":48}})"));
  EXPECT_EQ(t.points("A-level", "A"), 48);
  EXPECT_THROW(tariff_from_json(json::parse(R"({"A-level":{"A*":"lots"}})")), Error);
  for (SubjectTag tag : {SubjectTag::Maths, SubjectTag::FurtherMaths, SubjectTag::Other}) {
    EXPECT_EQ(subject_tag_from_name(subject_tag_name(tag)), tag);
  }
  EXPECT_THROW(subject_tag_from_name("physics"), Error);
}

TEST(Cohort, FilterKeepsOnlyCompleteStudents) {
  StudentOutcome full{"a", 0.5, {}, {{"M1", 60.0}, {"M2", 70.0}}};
  StudentOutcome missing{"b", 0.5, {}, {{"M1", 60.0}, {"M2", std::nullopt}}};
  StudentOutcome none{"c", 0.5, {}, {}};
  const auto kept = cohort_filter({full, missing, none});
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].student_id, "a");
  EXPECT_THROW(exam_average(missing), Error);
}

TEST(Cohort, ExamAverageMatchesOracleMean) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> mark(0, 100);
  for (int i = 0; i < 200; ++i) {
    StudentOutcome s;
    std::vector<double> marks;
    const int n = 1 + static_cast<int>(rng() % 6);
    for (int m = 0; m < n; ++m) {
      marks.push_back(mark(rng));
      s.exam_marks["M" + std::to_string(m)] = marks.back();
    }
    ASSERT_NEAR(exam_average(s), oracle::mean(marks), 1e-12);
  }
}

// Exam average is an exact affine function of the EPT score; tariffs are
// independent noise.
std::vector<StudentOutcome> noiseless_cohort(std::uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  const char* grades[] = {"A*", "A", "B", "C", "D", "E"};
  std::vector<StudentOutcome> out;
  for (int i = 0; i < n; ++i) {
    StudentOutcome s;
    s.student_id = "s" + std::to_string(i);
    s.ept_score = u(rng);
    const double avg = 30 + 60 * s.ept_score;
    s.exam_marks = {{"M1", avg - 5}, {"M2", avg + 5}};
    s.qualifications = {{"A-level", SubjectTag::Maths, grades[rng() % 6]},
                        {"A-level", SubjectTag::Other, grades[rng() % 6]}};
    out.push_back(s);
  }
  return out;
}

TEST(Report, NoiselessCohortGivesPerfectEptCorrelation) {
  auto students = noiseless_cohort(5, 40);
  students.push_back({"incomplete", 0.3, {}, {{"M1", std::nullopt}}});
  const CorrelationReport r = correlation_report(students, seed_tariff());
  EXPECT_EQ(r.included, 40u);
  EXPECT_EQ(r.excluded, 1u);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_EQ(r.rows[0].predictor, kPredictorEpt);
  EXPECT_EQ(r.rows[1].predictor, kPredictorTotalTariff);
  EXPECT_EQ(r.rows[2].predictor, kPredictorMathsTariff);
  EXPECT_NEAR(*r.rows[0].r, 1.0, 1e-12);
  const std::string table = format_correlation_table(r);
  EXPECT_NE(table.find("1.00"), std::string::npos);
  EXPECT_NE(table.find("students included: 40, excluded: 1"), std::string::npos);
  ASSERT_TRUE(r.combined);
  EXPECT_NEAR(r.combined->r, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.combined->lambda, 1.0);
}

TEST(Report, PermutationInvariant) {
  auto students = noiseless_cohort(8, 50);
  for (auto& s : students) s.exam_marks["M1"] = *s.exam_marks["M1"] + static_cast<double>(s.student_id.size() * 3);
  const TariffTable t = seed_tariff();
  const json before = correlation_to_json(correlation_report(students, t));
  std::mt19937_64 rng(1);
  std::shuffle(students.begin(), students.end(), rng);
  const json after = correlation_to_json(correlation_report(students, t));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(before["rows"][i]["r"].get<double>(), after["rows"][i]["r"].get<double>(), 1e-12);
  }
}

TEST(Report, DegenerateRowIsReportedNotThrown) {
  auto students = noiseless_cohort(9, 10);
  for (auto& s : students) s.qualifications = {{"A-level", SubjectTag::Other, "B"}};
  const CorrelationReport r = correlation_report(students, seed_tariff());
  EXPECT_TRUE(r.rows[0].r);
  EXPECT_FALSE(r.rows[1].r);
  EXPECT_FALSE(r.rows[2].r);
  EXPECT_FALSE(r.combined);
  const json j = correlation_to_json(r);
  EXPECT_TRUE(j["rows"][1]["r"].is_null());
  EXPECT_NE(format_correlation_table(r).find("n/a"), std::string::npos);
}

TEST(Report, EmptyCohortIsDegenerate) {
  const CorrelationReport r = correlation_report({}, seed_tariff());
  EXPECT_EQ(r.included, 0u);
  for (const auto& row : r.rows) EXPECT_FALSE(row.r);
}

TEST(Weighting, ReciprocalAttempts) {
  EXPECT_DOUBLE_EQ(reciprocal_weight(1), 1.0);
  EXPECT_DOUBLE_EQ(reciprocal_weight(4), 0.25);
  EXPECT_THROW(reciprocal_weight(0), Error);
  EXPECT_DOUBLE_EQ(attempt_weighted_score({{1.0, 1}, {0.75, 3}}), (1.0 + 0.25) / 2);
  EXPECT_DOUBLE_EQ(attempt_weighted_score({{1.0, 2}}, [](int) { return 1.0; }), 1.0);
}

TEST(Combined, EndpointsMatchSingleRows) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> z(0, 1);
  const char* grades[] = {"A*", "A", "B", "C", "D", "E"};
  std::vector<StudentOutcome> students;
  for (int i = 0; i < 80; ++i) {
    const double a = z(rng);
    StudentOutcome s;
    s.student_id = std::to_string(i);
    s.ept_score = std::clamp(0.6 + 0.15 * a + 0.1 * z(rng), 0.0, 1.0);
    s.exam_marks = {{"M1", 55 + 12 * a + 8 * z(rng)}};
    const int g = std::clamp(static_cast<int>(std::lround(2.5 - a - z(rng))), 0, 5);
    s.qualifications = {{"A-level", SubjectTag::Maths, grades[g]}};
    students.push_back(s);
  }
  const TariffTable t = seed_tariff();
  const CorrelationReport r = correlation_report(students, t);
  const CombinedPredictor at_zero = combined_predictor(students, t, {0.0});
  const CombinedPredictor at_one = combined_predictor(students, t, {1.0});
  EXPECT_DOUBLE_EQ(at_zero.r, *r.rows[1].r);
  EXPECT_DOUBLE_EQ(at_one.r, *r.rows[0].r);
  const CombinedPredictor best = combined_predictor(students, t);
  EXPECT_GE(best.r, std::max(at_zero.r, at_one.r));
  EXPECT_GE(best.lambda, 0.0);
  EXPECT_LE(best.lambda, 1.0);
  const auto grid = lambda_grid();
  EXPECT_EQ(grid.size(), 101u);
  EXPECT_DOUBLE_EQ(grid.front(), 0.0);
  EXPECT_DOUBLE_EQ(grid.back(), 1.0);
}

TEST(Scatter, RoundTripsAtFullPrecision) {
  std::vector<StudentOutcome> students = noiseless_cohort(4, 25);
  students[3].ept_score = 1.0 / 3.0;
  students.push_back({"incomplete", 0.3, {}, {{"M1", std::nullopt}}});
  const std::string csv = scatter_export(students);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "ept_score,exam_avg");
  const auto pairs = parse_scatter(csv);
  ASSERT_EQ(pairs.size(), 25u);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EXPECT_EQ(pairs[i].first, students[i].ept_score);
    EXPECT_EQ(pairs[i].second, exam_average(students[i]));
  }
  EXPECT_THROW(parse_scatter("x,y\n1,2\n"), Error);
}

TEST(Ingest, CsvParsersAndBuilder) {
  const MarkTable marks = parse_marks_csv("student_id,module,mark\ns1,M1,60\ns1,M2,\ns2,M1,70.5\n");
  EXPECT_EQ(*marks.at("s1").at("M1"), 60.0);
  EXPECT_FALSE(marks.at("s1").at("M2"));
  const QualificationTable quals =
      parse_quals_csv("student_id,kind,subject_tag,grade\ns1,A-level,maths,A*\n");
  EXPECT_EQ(quals.at("s1")[0].subject, SubjectTag::Maths);
  EXPECT_EQ(parse_marks_csv(marks_to_csv(marks)), marks);
  try {
    parse_marks_csv("student_id,module,mark\ns1,M1,sixty\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::kFileFormat);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(parse_marks_csv("who,what\n"), Error);
  const auto outcomes = build_outcomes({{"s1", 0.5}, {"s2", 0.9}, {"s3", 0.1}}, marks, quals);
  ASSERT_EQ(outcomes.size(), 3u);
  EXPECT_FALSE(outcomes[0].complete());
  EXPECT_TRUE(outcomes[1].complete());
  EXPECT_FALSE(outcomes[2].complete());
}

}  // namespace
}  // namespace prepmark
