#include "prepmark/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "prepmark/error.hpp"

namespace prepmark {
namespace {

[[noreturn]] void degenerate(const std::string& what) {
  throw Error(errc::kDegenerateSample, what);
}

std::vector<double> zscores(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(v.size()));
  std::vector<double> z;
  z.reserve(v.size());
  for (double x : v) z.push_back(sd > 0.0 ? (x - mean) / sd : 0.0);
  return z;
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(errc::kInvalidArgument, "paired samples differ in length");
  const std::size_t n = x.size();
  if (n < 3) degenerate(fmt::format("need at least 3 pairs, got {}", n));
  double mx = 0.0, my = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) degenerate("non-finite value in sample");
    const double k = static_cast<double>(i + 1);
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    mx += dx / k;
    my += dy / k;
    sxx += dx * (x[i] - mx);
    syy += dy * (y[i] - my);
    sxy += dx * (y[i] - my);
  }
  if (!(sxx > 0.0)) degenerate("zero variance in the first variable");
  if (!(syy > 0.0)) degenerate("zero variance in the second variable");
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

double pearson(const PairedSample& s) {
  std::vector<double> x, y;
  x.reserve(s.pairs.size());
  y.reserve(s.pairs.size());
  for (const auto& [a, b] : s.pairs) {
    x.push_back(a);
    y.push_back(b);
  }
  return pearson(std::span<const double>(x), std::span<const double>(y));
}

std::string_view subject_tag_name(SubjectTag t) {
  switch (t) {
    case SubjectTag::Maths: return "maths";
    case SubjectTag::FurtherMaths: return "further_maths";
    case SubjectTag::Other: return "other";
  }
  return "other";
}

SubjectTag subject_tag_from_name(std::string_view name) {
  if (name == "maths") return SubjectTag::Maths;
  if (name == "further_maths") return SubjectTag::FurtherMaths;
  if (name == "other") return SubjectTag::Other;
  throw Error(errc::kInvalidArgument,
              "unknown subject tag '" + std::string(name) + "' (maths, further_maths, other)");
}

void TariffTable::set(const std::string& kind, const std::string& grade, int points) {
  points_[{kind, grade}] = points;
}

int TariffTable::points(const std::string& kind, const std::string& grade) const {
  auto it = points_.find({kind, grade});
  if (it == points_.end()) {
    throw Error(errc::kUnknownGrade, "no tariff for " + kind + " grade '" + grade + "'");
  }
  return it->second;
}

// {"A-level": {"A*": 56, ...}, "AS-level": {...}}
TariffTable tariff_from_json(const json& j) {
  if (!j.is_object()) throw Error(errc::kFileFormat, "tariff table must be an object");
  TariffTable t;
  for (const auto& [kind, grades] : j.items()) {
    if (!grades.is_object()) throw Error(errc::kFileFormat, "tariff for " + kind + " must be an object");
    for (const auto& [grade, points] : grades.items()) {
      if (!points.is_number_integer()) {
        throw Error(errc::kFileFormat, "tariff points for " + kind + " " + grade + " must be an integer");
      }
      t.set(kind, grade, points.get<int>());
    }
  }
  return t;
}

TariffTable load_tariff(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::kIo, "cannot open " + path);
  try {
    return tariff_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(errc::kFileFormat, path + ": " + e.what());
  }
}

bool StudentOutcome::complete() const {
  if (exam_marks.empty()) return false;
  for (const auto& [_, m] : exam_marks) {
    if (!m) return false;
  }
  return true;
}

int total_tariff(const StudentOutcome& s, const TariffTable& t) {
  int sum = 0;
  for (const auto& q : s.qualifications) sum += t.points(q.kind, q.grade);
  return sum;
}

int maths_only_tariff(const StudentOutcome& s, const TariffTable& t) {
  int sum = 0;
  for (const auto& q : s.qualifications) {
    if (q.subject != SubjectTag::Other) sum += t.points(q.kind, q.grade);
  }
  return sum;
}

std::vector<StudentOutcome> cohort_filter(const std::vector<StudentOutcome>& students) {
  std::vector<StudentOutcome> out;
  for (const auto& s : students) {
    if (s.complete()) out.push_back(s);
  }
  return out;
}

double exam_average(const StudentOutcome& s) {
  if (!s.complete()) {
    throw Error(errc::kInvalidArgument, "student '" + s.student_id + "' has missing exam marks");
  }
  double sum = 0.0;
  for (const auto& [_, m] : s.exam_marks) sum += *m;
  return sum / static_cast<double>(s.exam_marks.size());
}

CorrelationReport correlation_report(const std::vector<StudentOutcome>& students,
                                     const TariffTable& t) {
  CorrelationReport report;
  const auto kept = cohort_filter(students);
  report.included = kept.size();
  report.excluded = students.size() - kept.size();

  std::vector<double> exam, ept, total, maths;
  for (const auto& s : kept) {
    exam.push_back(exam_average(s));
    ept.push_back(s.ept_score);
    total.push_back(total_tariff(s, t));
    maths.push_back(maths_only_tariff(s, t));
  }
  auto row = [&](const char* name, const std::vector<double>& x) {
    CorrelationRow r;
    r.predictor = name;
    try {
      r.r = pearson(x, exam);
    } catch (const Error& e) {
      if (e.code() != errc::kDegenerateSample) throw;
      r.error = e.what();
    }
    report.rows.push_back(std::move(r));
  };
  row(kPredictorEpt, ept);
  row(kPredictorTotalTariff, total);
  row(kPredictorMathsTariff, maths);
  if (report.rows[0].r && report.rows[1].r) report.combined = combined_predictor(kept, t);
  return report;
}

double reciprocal_weight(int attempts) {
  if (attempts < 1) throw Error(errc::kInvalidArgument, "attempt count must be at least 1");
  return 1.0 / static_cast<double>(attempts);
}

double attempt_weighted_score(const std::vector<TopicAttempts>& topics, const AttemptWeight& weight) {
  if (topics.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& t : topics) sum += t.score * weight(t.attempts);
  return sum / static_cast<double>(topics.size());
}

std::vector<double> lambda_grid(int steps) {
  if (steps < 1) throw Error(errc::kInvalidArgument, "grid needs at least one step");
  std::vector<double> g;
  for (int i = 0; i <= steps; ++i) g.push_back(static_cast<double>(i) / steps);
  return g;
}

CombinedPredictor combined_predictor(const std::vector<StudentOutcome>& students,
                                     const TariffTable& t, const std::vector<double>& grid) {
  const auto kept = cohort_filter(students);
  std::vector<double> exam, ept, tariff;
  for (const auto& s : kept) {
    exam.push_back(exam_average(s));
    ept.push_back(s.ept_score);
    tariff.push_back(total_tariff(s, t));
  }
  if (grid.empty()) throw Error(errc::kInvalidArgument, "empty lambda grid");
  const auto zept = zscores(ept);
  const auto ztar = zscores(tariff);

  std::optional<CombinedPredictor> best;
  std::vector<double> mix(kept.size());
  for (double lambda : grid) {
    double r = 0.0;
    if (lambda == 0.0) {
      r = pearson(tariff, exam);
    } else if (lambda == 1.0) {
      r = pearson(ept, exam);
    } else {
      for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = lambda * zept[i] + (1.0 - lambda) * ztar[i];
      r = pearson(mix, exam);
    }
    if (!best || r > best->r) best = CombinedPredictor{lambda, r};
  }
  return *best;
}

std::string scatter_export(const std::vector<StudentOutcome>& students) {
  std::string out = "ept_score,exam_avg\n";
  for (const auto& s : cohort_filter(students)) {
    out += fmt::format("{:.17g},{:.17g}\n", s.ept_score, exam_average(s));
  }
  return out;
}

std::vector<std::pair<double, double>> parse_scatter(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::pair<double, double>> out;
  if (!std::getline(in, line) || line != "ept_score,exam_avg") {
    throw Error(errc::kFileFormat, "scatter export must start with 'ept_score,exam_avg'");
  }
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument("no comma");
      out.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw Error(errc::kFileFormat, fmt::format("scatter line {}: '{}'", lineno, line));
    }
  }
  return out;
}

std::string format_correlation_table(const CorrelationReport& r) {
  std::string out = fmt::format("{:<22} {:>6}\n", "Predictor", "r");
  for (const auto& row : r.rows) {
    out += fmt::format("{:<22} {:>6}\n", row.predictor,
                       row.r ? fmt::format("{:.2f}", *row.r) : std::string("n/a"));
  }
  if (r.combined) {
    out += fmt::format("{:<22} {:>6}  (lambda = {:.2f})\n", "Combined", fmt::format("{:.2f}", r.combined->r),
                       r.combined->lambda);
  }
  out += fmt::format("students included: {}, excluded: {}\n", r.included, r.excluded);
  return out;
}

json correlation_to_json(const CorrelationReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    json j{{"predictor", row.predictor}, {"r", row.r ? json(*row.r) : json()}};
    if (!row.error.empty()) j["error"] = row.error;
    rows.push_back(std::move(j));
  }
  json out{{"included", r.included}, {"excluded", r.excluded}, {"rows", rows}};
  out["combined"] = r.combined ? json{{"lambda", r.combined->lambda}, {"r", r.combined->r}} : json();
  return out;
}

}  // namespace prepmark
