#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace prepmark {

using nlohmann::json;

struct PairedSample {
  std::vector<std::pair<double, double>> pairs;
  std::string x_label = "x";
  std::string y_label = "y";
};

/// Pearson product-moment correlation.
///
/// Single pass with Welford updates of the means and co-moments. Throws
/// DegenerateSample for fewer than 3 pairs, non-finite values or zero
/// variance in either coordinate.
double pearson(const PairedSample& s);
double pearson(std::span<const double> x, std::span<const double> y);

enum class SubjectTag { Maths, FurtherMaths, Other };

std::string_view subject_tag_name(SubjectTag t);
SubjectTag subject_tag_from_name(std::string_view name);  // throws InvalidArgument

struct Qualification {
  std::string kind;  // e.g. "A-level", "AS-level"
  SubjectTag subject = SubjectTag::Other;
  std::string grade;
};

// (qualification kind, grade) -> points. Values are configuration.
class TariffTable {
 public:
  void set(const std::string& kind, const std::string& grade, int points);
  int points(const std::string& kind, const std::string& grade) const;  // UnknownGrade
  const std::map<std::pair<std::string, std::string>, int>& entries() const { return points_; }

 private:
  std::map<std::pair<std::string, std::string>, int> points_;
};

TariffTable tariff_from_json(const json& j);
TariffTable load_tariff(const std::string& path);

struct StudentOutcome {
  std::string student_id;
  double ept_score = 0.0;
  std::vector<Qualification> qualifications;
  // module -> first-attempt mark; nullopt when enrolled but no mark
  std::map<std::string, std::optional<double>> exam_marks;

  bool complete() const;
};

int total_tariff(const StudentOutcome& s, const TariffTable& t);
int maths_only_tariff(const StudentOutcome& s, const TariffTable& t);

// Keeps students with a mark for every enrolled module.
std::vector<StudentOutcome> cohort_filter(const std::vector<StudentOutcome>& students);

double exam_average(const StudentOutcome& s);  // InvalidArgument unless complete

inline constexpr const char* kPredictorEpt = "EPT score";
inline constexpr const char* kPredictorTotalTariff = "Total entry tariff";
inline constexpr const char* kPredictorMathsTariff = "Maths-only tariff";

struct CorrelationRow {
  std::string predictor;
  std::optional<double> r;  // empty when the sample is degenerate
  std::string error;
};

struct CombinedPredictor {
  double lambda = 0.0;
  double r = 0.0;
};

struct CorrelationReport {
  std::size_t included = 0;
  std::size_t excluded = 0;
  std::vector<CorrelationRow> rows;
  std::optional<CombinedPredictor> combined;
};

// Filters the cohort, then correlates each predictor with exam_average.
CorrelationReport correlation_report(const std::vector<StudentOutcome>& students,
                                     const TariffTable& t);

struct TopicAttempts {
  double score = 0.0;
  int attempts = 1;
};

using AttemptWeight = std::function<double(int attempts)>;
double reciprocal_weight(int attempts);

// Mean over topics of score * weight(attempts); weight defaults to 1/n.
double attempt_weighted_score(const std::vector<TopicAttempts>& topics,
                              const AttemptWeight& weight = reciprocal_weight);

// Grid from 0 to 1 in steps of 1/steps.
std::vector<double> lambda_grid(int steps = 100);

/// Scans r(lambda * z(ept) + (1 - lambda) * z(tariff), exam average) over
/// the grid; ties go to the smallest lambda. At lambda 0 and 1 the raw
/// predictor is used, so the endpoints equal the report rows exactly.
CombinedPredictor combined_predictor(const std::vector<StudentOutcome>& students,
                                     const TariffTable& t,
                                     const std::vector<double>& grid = lambda_grid());

// "ept_score,exam_avg" with a header; one row per complete student.
std::string scatter_export(const std::vector<StudentOutcome>& students);
std::vector<std::pair<double, double>> parse_scatter(const std::string& text);

// One line per predictor with r to two decimals, then the combined line and counts.
std::string format_correlation_table(const CorrelationReport& r);
json correlation_to_json(const CorrelationReport& r);

}  // namespace prepmark
