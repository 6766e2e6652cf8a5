#include "prepmark/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "prepmark/error.hpp"
#include "prepmark/grading_json.hpp"

namespace prepmark {
namespace {

constexpr Timestamp kHour = 3600;
constexpr Timestamp kDay = 24 * kHour;

const std::vector<std::string> kMalformedExpressions{"3x + * 2", "(x - 1", "x^", "2 ** x", "sin x"};

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::string a_level_grade(double g) {
  if (g > 1.2) return "A*";
  if (g > 0.5) return "A";
  if (g > -0.2) return "B";
  if (g > -0.9) return "C";
  if (g > -1.6) return "D";
  return "E";
}

std::string as_level_grade(double g) {
  const std::string a = a_level_grade(g);
  return a == "A*" ? "A" : a;
}

class Cohort {
 public:
  Cohort(Store& store, const SimulationConfig& cfg, const FeedbackObserver& observer)
      : store_(store), cfg_(cfg), observer_(observer), rng_(cfg.seed) {}

  SimulationResult run() {
    if (cfg_.students < 0 || cfg_.max_attempts < 1) {
      throw Error(errc::kInvalidArgument, "simulation needs students >= 0 and max_attempts >= 1");
    }
    const Timestamp open = store_.cohort().deadline - 7 * kDay;
    for (int i = 1; i <= cfg_.students; ++i) {
      const std::string id = fmt::format("s{:03d}", i);
      const double ability = normal_(rng_);
      result_.student_ids.push_back(id);
      result_.ability[id] = ability;
      store_.enroll(id, fmt::format("tok-{:016x}", rng_()), open);
      Timestamp clock = open + static_cast<Timestamp>(unit_(rng_) * kDay);
      for (const auto& st : store_.cohort().subtests) take_subtest(id, ability, st.topic, clock);
      add_exam_marks(id, ability);
      add_qualifications(id, ability);
    }
    return std::move(result_);
  }

 private:
  void take_subtest(const std::string& id, double ability, Topic topic, Timestamp& clock) {
    for (int k = 1; k <= cfg_.max_attempts; ++k) {
      const StartedAttempt started = store_.start_attempt(id, topic, clock);
      clock += 20 * 60 + static_cast<Timestamp>(unit_(rng_) * 70 * 60);
      std::map<std::string, json> responses;
      const double p = logistic(1.7 * ability + 0.9 + 0.9 * (k - 1));
      for (const auto& q : started.questions) {
        for (const auto& dp : q.parts) {
          const InstancePart& part = store_.read(
              [&](const Session& s) -> const InstancePart& { return s.instance_part(id, dp.id); });
          if (unit_(rng_) < p) {
            responses[dp.id] = reference_response(part);
          } else if (auto wrong = wrong_response(part)) {
            responses[dp.id] = *wrong;
          }
        }
      }
      const FeedbackView view = store_.submit(started.attempt_id, responses, clock);
      ++result_.attempts;
      if (observer_) observer_(id, view);
      clock += 2 * kHour + static_cast<Timestamp>(unit_(rng_) * 28 * kHour);
      if (view.passed) break;
    }
  }

  // nullopt means the part is left blank
  std::optional<json> wrong_response(const InstancePart& part) {
    const double u = unit_(rng_);
    if (u < cfg_.blank_rate) return std::nullopt;
    const bool malformed = u < cfg_.blank_rate + cfg_.malformed_rate;
    const json ref = reference_response(part);
    const std::string& kind = part.kind;

    if (kind == "structural_poly" || kind == "equivalence" || kind == "antiderivative") {
      if (malformed) return pick(kMalformedExpressions);
      return "2*(" + ref.get<std::string>() + ")";
    }
    if (kind == "numeric_multi") {
      if (malformed) return "1/";
      return fmt::format("{}", json_number(ref) + 1.0);
    }
    if (kind == "choice_single") {
      if (malformed) return json::array({ref});
      std::vector<std::string> others;
      for (const auto& o : part.options) {
        if (o.id != ref.get<std::string>()) others.push_back(o.id);
      }
      return others.empty() ? json("no_such_option") : json(pick(others));
    }
    if (kind == "choice_multi") {
      if (malformed) return "all of them";
      std::set<std::string> ids = ref.get<std::set<std::string>>();
      const std::string& toggle = part.options[rng_() % part.options.size()].id;
      if (!ids.erase(toggle)) ids.insert(toggle);
      return ids;
    }
    if (kind == "line_sketch") {
      if (malformed) return "two points";
      json shifted = ref;
      for (auto& p : shifted) p[1] = p[1].get<double>() + 1.0;
      return shifted;
    }
    if (kind == "constraint") {
      if (malformed) return json::array();
      json shifted = json::object();
      for (const auto& [name, v] : ref.items()) shifted[name] = fmt::format("{}", json_number(v) + 1.0);
      return shifted;
    }
    return std::nullopt;
  }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[rng_() % v.size()];
  }

  void add_exam_marks(const std::string& id, double ability) {
    auto& marks = result_.marks[id];
    for (const auto& m : cfg_.modules) {
      const double mark = std::clamp(std::round(55.0 + 13.0 * ability + 9.0 * normal_(rng_)), 0.0, 100.0);
      marks[m] = mark;
    }
    if (unit_(rng_) < cfg_.incomplete_rate && !cfg_.modules.empty()) {
      marks[pick(cfg_.modules)] = std::nullopt;
    }
  }

  void add_qualifications(const std::string& id, double ability) {
    auto& quals = result_.quals[id];
    quals.push_back({"A-level", SubjectTag::Maths, a_level_grade(ability + 1.3 * normal_(rng_))});
    if (ability + normal_(rng_) > 0.6) {
      quals.push_back({"A-level", SubjectTag::FurtherMaths,
                       a_level_grade(ability - 0.3 + 1.3 * normal_(rng_))});
    }
    for (int i = 0; i < 2; ++i) {
      quals.push_back({"A-level", SubjectTag::Other, a_level_grade(0.5 * ability + 1.2 * normal_(rng_))});
    }
    if (unit_(rng_) < 0.4) {
      quals.push_back({"AS-level", SubjectTag::Other, as_level_grade(0.5 * ability + 1.2 * normal_(rng_))});
    }
  }

  Store& store_;
  const SimulationConfig& cfg_;
  const FeedbackObserver& observer_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  SimulationResult result_;
};

}  // namespace

SimulationResult simulate(Store& store, const SimulationConfig& config, const FeedbackObserver& observer) {
  Cohort cohort(store, config, observer);
  SimulationResult r = cohort.run();
  store.write_snapshot();
  return r;
}

void write_ingest_files(const Store& store, const SimulationResult& r) {
  const StoreLayout& l = store.layout();
  fs::create_directories(l.marks().parent_path());
  write_text_file(l.marks().string(), marks_to_csv(r.marks));
  write_text_file(l.quals().string(), quals_to_csv(r.quals));
}

}  // namespace prepmark
