#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "prepmark/grading.hpp"
#include "prepmark/questionbank.hpp"
#include "prepmark/timeutil.hpp"

namespace prepmark {

// Which per-topic score feeds the single "EPT score".
enum class ScoreMode { First, Best, Weighted };

std::string_view score_mode_name(ScoreMode m);
ScoreMode score_mode_from_name(std::string_view name);

struct Subtest {
  Topic topic = Topic::Algebra;
  std::vector<std::string> template_ids;
};

struct CohortConfig {
  double pass_mark = 0.75;
  Timestamp deadline = 0;
  std::vector<Subtest> subtests;
  ScoreMode ept_mode = ScoreMode::First;

  // Throws InvalidSpec unless 0 < pass_mark <= 1, subtests are non-empty and
  // every template exists in the bank.
  void validate(const Bank& bank) const;
  const Subtest& subtest(Topic topic) const;  // throws UnknownTopic
};

CohortConfig cohort_from_json(const json& j);
json cohort_to_json(const CohortConfig& c);
CohortConfig load_cohort(const std::string& path);

struct PartState {
  std::string part_id;
  std::string template_id;
  std::uint64_t seed = 0;
  std::optional<GradeOutcome> best;  // empty until first graded
  bool locked = false;               // correct; never regraded
  json locked_response;
};

struct Attempt {
  int index = 0;  // 1-based
  std::string id;
  Timestamp started = 0;
  std::optional<Timestamp> submitted;
  bool late = false;
  std::map<std::string, json> responses;
  std::map<std::string, GradeOutcome> outcomes;
  double score = 0.0;
};

struct SubTestRecord {
  Topic topic = Topic::Algebra;
  std::vector<PartState> parts;
  std::vector<Attempt> attempts;
  bool passed = false;
  bool passed_by_deadline = false;
  std::optional<double> first_attempt_score;
  std::optional<int> attempts_to_pass;

  int submitted_attempts() const;
  double best_score() const;  // mean of best part scores
  const Attempt* open_attempt() const;
};

struct StudentRecord {
  std::string id;
  std::string token;
  std::vector<SubTestRecord> subtests;  // cohort order
};

struct PartFeedback {
  std::string part_id;
  bool correct = false;
  bool carried = false;  // locked by an earlier attempt
  double score = 0.0;
  std::set<std::string> flags;
  std::string feedback_key;
  // correct parts: full feedback and links; wrong parts: hint only
  std::string text;
  std::vector<std::string> links;
  std::vector<std::string> module_links;
  std::string diagnostic;  // parser message about the student's own input
};

// For wrong parts the view has no field that can hold the expected answer.
struct FeedbackView {
  std::string attempt_id;
  std::string topic;
  int index = 0;
  double score = 0.0;
  bool passed = false;
  bool late = false;
  std::vector<PartFeedback> parts;
};

json feedback_to_json(const FeedbackView& v);

struct StartedAttempt {
  std::string attempt_id;
  std::string student_id;
  std::string topic;
  int index = 0;
  bool late = false;
  bool resumed = false;
  std::vector<std::string> locked_parts;
  std::vector<DisplayQuestion> questions;  // open parts only
};

json started_to_json(const StartedAttempt& s);

struct TopicStatus {
  std::string topic;
  bool passed = false;
  bool passed_by_deadline = false;
  int attempts = 0;
  double best_score = 0.0;
  std::optional<double> first_attempt_score;
};

struct StudentStatus {
  std::string student_id;
  std::vector<TopicStatus> topics;
  double ept_score = 0.0;
  std::string ept_mode;
};

json status_to_json(const StudentStatus& s);

struct FollowUpRow {
  std::string student_id;
  std::string topic;
  int attempts = 0;
};

struct FollowUpReport {
  Timestamp deadline = 0;
  std::vector<FollowUpRow> rows;
};

json followup_to_json(const FollowUpReport& r);

// Graded but not yet applied submission.
struct PreparedSubmission {
  std::string attempt_id;
  std::string student_id;
  Timestamp at = 0;
  std::map<std::string, json> responses;
  std::map<std::string, GradeOutcome> outcomes;
};

/// The retake rubric as a deterministic state machine.
///
/// Not thread-safe; the store serializes writers. const member functions may
/// run concurrently with each other.
class Session {
 public:
  Session(std::shared_ptr<const Bank> bank, CohortConfig cohort);

  const CohortConfig& cohort() const { return cohort_; }
  const Bank& bank() const { return *bank_; }

  void enroll(const std::string& student_id, const std::string& token);
  bool has_student(const std::string& student_id) const;
  const StudentRecord& student(const std::string& student_id) const;  // UnknownStudent
  std::vector<std::string> student_ids() const;
  std::optional<std::string> student_for_token(const std::string& token) const;

  // Reuses the open attempt for (student, topic) if there is one.
  StartedAttempt start_attempt(const std::string& student_id, Topic topic, Timestamp now);
  // The attempt id a new start would receive, or the open one.
  std::string next_attempt_id(const std::string& student_id, Topic topic) const;

  // Grades open parts. Per-part problems become score-0 outcomes; unknown
  // part ids throw InvalidArgument, an already submitted attempt throws
  // NoOpenAttempt.
  PreparedSubmission prepare_submit(const std::string& attempt_id,
                                    const std::map<std::string, json>& responses,
                                    Timestamp now) const;
  FeedbackView apply_submit(const PreparedSubmission& prepared);
  FeedbackView submit(const std::string& attempt_id, const std::map<std::string, json>& responses,
                      Timestamp now);

  std::string student_for_attempt(const std::string& attempt_id) const;  // UnknownAttempt

  StudentStatus status(const std::string& student_id) const;
  // Throws NotYetDue before the deadline.
  FollowUpReport follow_up_report(Timestamp now) const;

  const InstancePart& instance_part(const std::string& student_id, const std::string& part_id) const;
  const QuestionInstance& instance(const std::string& student_id,
                                   const std::string& template_id) const;

  // Canonical snapshot document of all derived state.
  json to_json() const;

 private:
  struct AttemptRef {
    std::string student_id;
    std::size_t subtest = 0;
    std::size_t attempt = 0;
  };

  StudentRecord& mutable_student(const std::string& student_id);
  std::size_t subtest_index(Topic topic) const;
  double score_for_ept(const SubTestRecord& r) const;

  std::shared_ptr<const Bank> bank_;
  CohortConfig cohort_;
  std::map<std::string, StudentRecord> students_;
  std::map<std::string, std::string> tokens_;
  std::map<std::string, std::map<std::string, QuestionInstance>> instances_;
  std::map<std::string, AttemptRef> attempts_;
  long next_attempt_ = 1;
};

}  // namespace prepmark
