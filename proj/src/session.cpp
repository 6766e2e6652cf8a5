#include "prepmark/session.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>

#include "prepmark/analytics.hpp"
#include "prepmark/error.hpp"

namespace prepmark {
namespace {

// Guards the inclusive pass boundary against rounding in the mean.
constexpr double kPassEpsilon = 1e-12;

[[noreturn]] void invalid(const std::string& what) { throw Error(errc::kInvalidSpec, what); }

std::string part_template_id(const std::string& part_id) {
  const auto dot = part_id.rfind('.');
  return dot == std::string::npos ? part_id : part_id.substr(0, dot);
}

}  // namespace

std::string_view score_mode_name(ScoreMode m) {
  switch (m) {
    case ScoreMode::First: return "first";
    case ScoreMode::Best: return "best";
    case ScoreMode::Weighted: return "weighted";
  }
  return "first";
}

ScoreMode score_mode_from_name(std::string_view name) {
  if (name == "first") return ScoreMode::First;
  if (name == "best") return ScoreMode::Best;
  if (name == "weighted") return ScoreMode::Weighted;
  invalid("unknown EPT score mode '" + std::string(name) + "' (first, best, weighted)");
}

// ---- cohort config ----------------------------------------------------------

void CohortConfig::validate(const Bank& bank) const {
  if (!(pass_mark > 0.0 && pass_mark <= 1.0)) invalid("pass_mark must lie in (0, 1]");
  if (subtests.empty()) invalid("cohort has no sub-tests");
  std::set<Topic> seen;
  for (const auto& s : subtests) {
    if (!seen.insert(s.topic).second) {
      invalid("topic " + std::string(topic_name(s.topic)) + " listed twice");
    }
    if (s.template_ids.empty()) invalid("sub-test " + std::string(topic_name(s.topic)) + " is empty");
    for (const auto& id : s.template_ids) {
      if (!bank.contains(id)) invalid("sub-test refers to unknown template '" + id + "'");
      if (bank.find(id).topic != s.topic) {
        invalid("template '" + id + "' belongs to another topic");
      }
    }
  }
}

const Subtest& CohortConfig::subtest(Topic topic) const {
  for (const auto& s : subtests) {
    if (s.topic == topic) return s;
  }
  throw Error(errc::kUnknownTopic, "topic " + std::string(topic_name(topic)) + " is not in this cohort");
}

CohortConfig cohort_from_json(const json& j) {
  if (!j.is_object()) throw Error(errc::kFileFormat, "cohort config must be an object");
  CohortConfig c;
  try {
    c.pass_mark = j.value("pass_mark", c.pass_mark);
    if (!j.contains("deadline")) throw Error(errc::kFileFormat, "cohort config needs a deadline");
    c.deadline = parse_timestamp(j.at("deadline").get<std::string>());
    c.ept_mode = score_mode_from_name(j.value("ept_score", std::string("first")));
    for (const auto& s : j.at("subtests")) {
      Subtest st;
      const std::string name = s.at("topic").get<std::string>();
      auto topic = topic_from_name(name);
      if (!topic) throw Error(errc::kFileFormat, "unknown topic '" + name + "'");
      st.topic = *topic;
      st.template_ids = s.at("templates").get<std::vector<std::string>>();
      c.subtests.push_back(std::move(st));
    }
  } catch (const json::exception& e) {
    throw Error(errc::kFileFormat, std::string("cohort config: ") + e.what());
  }
  return c;
}

json cohort_to_json(const CohortConfig& c) {
  json subtests = json::array();
  for (const auto& s : c.subtests) {
    subtests.push_back({{"topic", topic_name(s.topic)}, {"templates", s.template_ids}});
  }
  return json{{"pass_mark", c.pass_mark},
              {"deadline", format_timestamp(c.deadline)},
              {"ept_score", score_mode_name(c.ept_mode)},
              {"subtests", subtests}};
}

CohortConfig load_cohort(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::kIo, "cannot open " + path);
  try {
    return cohort_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(errc::kFileFormat, path + ": " + e.what());
  }
}

// ---- records -------------------------------------------------------------------

int SubTestRecord::submitted_attempts() const {
  return static_cast<int>(std::count_if(attempts.begin(), attempts.end(),
                                        [](const Attempt& a) { return a.submitted.has_value(); }));
}

double SubTestRecord::best_score() const {
  if (parts.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : parts) sum += p.best ? p.best->score : 0.0;
  return sum / static_cast<double>(parts.size());
}

const Attempt* SubTestRecord::open_attempt() const {
  if (!attempts.empty() && !attempts.back().submitted) return &attempts.back();
  return nullptr;
}

// ---- session --------------------------------------------------------------------

Session::Session(std::shared_ptr<const Bank> bank, CohortConfig cohort)
    : bank_(std::move(bank)), cohort_(std::move(cohort)) {
  cohort_.validate(*bank_);
}

void Session::enroll(const std::string& student_id, const std::string& token) {
  if (student_id.empty()) throw Error(errc::kInvalidArgument, "student id must not be empty");
  if (students_.contains(student_id)) {
    throw Error(errc::kDuplicateStudent, "student '" + student_id + "' is already enrolled");
  }
  if (token.empty() || tokens_.contains(token)) {
    throw Error(errc::kInvalidArgument, "token must be non-empty and unique");
  }
  StudentRecord rec;
  rec.id = student_id;
  rec.token = token;
  auto& instances = instances_[student_id];
  for (const auto& st : cohort_.subtests) {
    SubTestRecord sub;
    sub.topic = st.topic;
    for (const auto& tid : st.template_ids) {
      const std::uint64_t seed = student_seed(student_id, tid);
      const QuestionInstance& inst =
          instances.emplace(tid, instantiate(bank_->find(tid), seed)).first->second;
      for (const auto& part : inst.parts) {
        PartState ps;
        ps.part_id = part.id;
        ps.template_id = tid;
        ps.seed = seed;
        sub.parts.push_back(std::move(ps));
      }
    }
    rec.subtests.push_back(std::move(sub));
  }
  students_.emplace(student_id, std::move(rec));
  tokens_.emplace(token, student_id);
}

bool Session::has_student(const std::string& student_id) const {
  return students_.contains(student_id);
}

const StudentRecord& Session::student(const std::string& student_id) const {
  auto it = students_.find(student_id);
  if (it == students_.end()) {
    throw Error(errc::kUnknownStudent, "unknown student '" + student_id + "'");
  }
  return it->second;
}

StudentRecord& Session::mutable_student(const std::string& student_id) {
  return const_cast<StudentRecord&>(std::as_const(*this).student(student_id));
}

std::vector<std::string> Session::student_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, _] : students_) ids.push_back(id);
  return ids;
}

std::optional<std::string> Session::student_for_token(const std::string& token) const {
  auto it = tokens_.find(token);
  if (it == tokens_.end()) return std::nullopt;
  return it->second;
}

std::size_t Session::subtest_index(Topic topic) const {
  for (std::size_t i = 0; i < cohort_.subtests.size(); ++i) {
    if (cohort_.subtests[i].topic == topic) return i;
  }
  throw Error(errc::kUnknownTopic,
              "topic " + std::string(topic_name(topic)) + " is not in this cohort");
}

const QuestionInstance& Session::instance(const std::string& student_id,
                                          const std::string& template_id) const {
  student(student_id);
  const auto& per_student = instances_.at(student_id);
  auto it = per_student.find(template_id);
  if (it == per_student.end()) {
    throw Error(errc::kUnknownTemplate, "unknown template '" + template_id + "'");
  }
  return it->second;
}

const InstancePart& Session::instance_part(const std::string& student_id,
                                           const std::string& part_id) const {
  const QuestionInstance& inst = instance(student_id, part_template_id(part_id));
  for (const auto& p : inst.parts) {
    if (p.id == part_id) return p;
  }
  throw Error(errc::kInvalidArgument, "unknown part '" + part_id + "'");
}

std::string Session::next_attempt_id(const std::string& student_id, Topic topic) const {
  const SubTestRecord& rec = student(student_id).subtests[subtest_index(topic)];
  if (const Attempt* open = rec.open_attempt()) return open->id;
  return fmt::format("att-{}", next_attempt_);
}

StartedAttempt Session::start_attempt(const std::string& student_id, Topic topic, Timestamp now) {
  const std::size_t si = subtest_index(topic);
  StudentRecord& stu = mutable_student(student_id);
  SubTestRecord& rec = stu.subtests[si];

  StartedAttempt out;
  out.student_id = student_id;
  out.topic = topic_name(topic);
  if (const Attempt* open = rec.open_attempt()) {
    out.attempt_id = open->id;
    out.index = open->index;
    out.late = open->late;
    out.resumed = true;
  } else {
    Attempt a;
    a.index = static_cast<int>(rec.attempts.size()) + 1;
    a.id = fmt::format("att-{}", next_attempt_++);
    a.started = now;
    a.late = now > cohort_.deadline;
    out.attempt_id = a.id;
    out.index = a.index;
    out.late = a.late;
    attempts_[a.id] = {student_id, si, rec.attempts.size()};
    rec.attempts.push_back(std::move(a));
  }

  std::set<std::string> open_parts;
  for (const auto& p : rec.parts) {
    if (p.locked) {
      out.locked_parts.push_back(p.part_id);
    } else {
      open_parts.insert(p.part_id);
    }
  }
  for (const auto& tid : cohort_.subtests[si].template_ids) {
    const QuestionInstance& inst = instance(student_id, tid);
    DisplayQuestion q = render(inst, bank_->find(tid));
    std::erase_if(q.parts, [&](const DisplayPart& p) { return !open_parts.contains(p.id); });
    if (!q.parts.empty()) out.questions.push_back(std::move(q));
  }
  return out;
}

std::string Session::student_for_attempt(const std::string& attempt_id) const {
  auto it = attempts_.find(attempt_id);
  if (it == attempts_.end()) throw Error(errc::kUnknownAttempt, "unknown attempt '" + attempt_id + "'");
  return it->second.student_id;
}

PreparedSubmission Session::prepare_submit(const std::string& attempt_id,
                                           const std::map<std::string, json>& responses,
                                           Timestamp now) const {
  auto it = attempts_.find(attempt_id);
  if (it == attempts_.end()) throw Error(errc::kUnknownAttempt, "unknown attempt '" + attempt_id + "'");
  const AttemptRef& ref = it->second;
  const SubTestRecord& rec = student(ref.student_id).subtests[ref.subtest];
  const Attempt& attempt = rec.attempts[ref.attempt];
  if (attempt.submitted) {
    throw Error(errc::kNoOpenAttempt, "attempt '" + attempt_id + "' was already submitted");
  }
  std::set<std::string> known;
  for (const auto& p : rec.parts) known.insert(p.part_id);
  for (const auto& [part_id, _] : responses) {
    if (!known.contains(part_id)) {
      throw Error(errc::kInvalidArgument,
                  "part '" + part_id + "' does not belong to attempt '" + attempt_id + "'");
    }
  }

  PreparedSubmission prep;
  prep.attempt_id = attempt_id;
  prep.student_id = ref.student_id;
  prep.at = now;
  for (const auto& p : rec.parts) {
    if (p.locked) continue;
    const InstancePart& part = instance_part(ref.student_id, p.part_id);
    auto r = responses.find(p.part_id);
    GradeOutcome o;
    if (r == responses.end() || r->second.is_null()) {
      o.feedback_key = feedback::kNoResponse;
    } else {
      prep.responses.emplace(p.part_id, r->second);
      try {
        o = grade(part.spec, response_from_json(part.kind, r->second));
      } catch (const Error& e) {
        // protocol-level problems with one part never abort the attempt
        o = GradeOutcome{};
        o.feedback_key = feedback::kInvalidResponse;
        o.flags.insert(feedback::kInvalidResponse);
        o.message = e.code() == errc::kUnknownOption ? "the answer names an option that does not exist"
                                                      : "the answer has the wrong shape for this part";
      }
    }
    prep.outcomes.emplace(p.part_id, std::move(o));
  }
  return prep;
}

FeedbackView Session::apply_submit(const PreparedSubmission& prep) {
  const AttemptRef ref = attempts_.at(prep.attempt_id);
  StudentRecord& stu = mutable_student(ref.student_id);
  SubTestRecord& rec = stu.subtests[ref.subtest];
  Attempt& attempt = rec.attempts[ref.attempt];
  if (attempt.submitted) {
    throw Error(errc::kNoOpenAttempt, "attempt '" + prep.attempt_id + "' was already submitted");
  }

  attempt.submitted = prep.at;
  attempt.late = attempt.late || prep.at > cohort_.deadline;
  attempt.responses = prep.responses;
  attempt.outcomes = prep.outcomes;

  FeedbackView view;
  view.attempt_id = attempt.id;
  view.topic = topic_name(rec.topic);
  view.index = attempt.index;
  view.late = attempt.late;

  for (auto& p : rec.parts) {
    const QuestionTemplate& t = bank_->find(p.template_id);
    PartFeedback f;
    f.part_id = p.part_id;
    if (p.locked) {
      f.correct = true;
      f.carried = true;
      f.score = 1.0;
      f.feedback_key = feedback::kCorrect;
      view.parts.push_back(std::move(f));
      continue;
    }
    const GradeOutcome& o = prep.outcomes.at(p.part_id);
    if (!p.best || o.score > p.best->score) p.best = o;
    if (o.correct) {
      p.locked = true;
      p.locked_response = prep.responses.at(p.part_id);
    }
    f.correct = o.correct;
    f.score = o.score;
    f.flags = o.flags;
    f.feedback_key = o.feedback_key;
    if (o.correct) {
      f.text = t.feedback.on_correct;
      f.links = t.feedback.links;
      f.module_links = t.module_links;
    } else {
      f.text = t.feedback.on_wrong;
      if (o.feedback_key == feedback::kParseError) f.diagnostic = o.message;
    }
    view.parts.push_back(std::move(f));
  }

  attempt.score = rec.best_score();
  view.score = attempt.score;
  if (attempt.index == 1) rec.first_attempt_score = attempt.score;
  if (attempt.score + kPassEpsilon >= cohort_.pass_mark) {
    if (!rec.passed) rec.attempts_to_pass = attempt.index;
    rec.passed = true;
    if (*attempt.submitted <= cohort_.deadline) rec.passed_by_deadline = true;
  }
  view.passed = rec.passed;
  return view;
}

FeedbackView Session::submit(const std::string& attempt_id,
                             const std::map<std::string, json>& responses, Timestamp now) {
  return apply_submit(prepare_submit(attempt_id, responses, now));
}

double Session::score_for_ept(const SubTestRecord& r) const {
  switch (cohort_.ept_mode) {
    case ScoreMode::First: return r.first_attempt_score.value_or(0.0);
    case ScoreMode::Best: return r.submitted_attempts() > 0 ? r.best_score() : 0.0;
    case ScoreMode::Weighted: {
      if (!r.first_attempt_score) return 0.0;
      const int n = r.attempts_to_pass.value_or(r.submitted_attempts());
      return attempt_weighted_score({{*r.first_attempt_score, n}});
    }
  }
  return 0.0;
}

StudentStatus Session::status(const std::string& student_id) const {
  const StudentRecord& stu = student(student_id);
  StudentStatus s;
  s.student_id = student_id;
  s.ept_mode = score_mode_name(cohort_.ept_mode);
  double sum = 0.0;
  for (const auto& rec : stu.subtests) {
    TopicStatus t;
    t.topic = topic_name(rec.topic);
    t.passed = rec.passed;
    t.passed_by_deadline = rec.passed_by_deadline;
    t.attempts = rec.submitted_attempts();
    t.best_score = rec.best_score();
    t.first_attempt_score = rec.first_attempt_score;
    s.topics.push_back(std::move(t));
    sum += score_for_ept(rec);
  }
  s.ept_score = stu.subtests.empty() ? 0.0 : sum / static_cast<double>(stu.subtests.size());
  return s;
}

FollowUpReport Session::follow_up_report(Timestamp now) const {
  if (now < cohort_.deadline) {
    throw Error(errc::kNotYetDue, "the follow-up report is available after " +
                                      format_timestamp(cohort_.deadline));
  }
  FollowUpReport report;
  report.deadline = cohort_.deadline;
  for (const auto& [id, stu] : students_) {
    for (const auto& rec : stu.subtests) {
      if (rec.passed_by_deadline) continue;
      const int on_time = static_cast<int>(
          std::count_if(rec.attempts.begin(), rec.attempts.end(), [&](const Attempt& a) {
            return a.submitted && *a.submitted <= cohort_.deadline;
          }));
      report.rows.push_back({id, std::string(topic_name(rec.topic)), on_time});
    }
  }
  return report;
}

// ---- serialization ------------------------------------------------------------------

json feedback_to_json(const FeedbackView& v) {
  json parts = json::array();
  for (const auto& p : v.parts) {
    json j{{"part", p.part_id}, {"correct", p.correct}, {"score", p.score}};
    if (p.carried) {
      j["carried"] = true;
    } else if (p.correct) {
      j["flags"] = p.flags;
      j["feedback"] = p.text;
      j["links"] = p.links;
      j["module_links"] = p.module_links;
    } else {
      j["flags"] = p.flags;
      j["feedback_key"] = p.feedback_key;
      j["hint"] = p.text;
      if (!p.diagnostic.empty()) j["diagnostic"] = p.diagnostic;
    }
    parts.push_back(std::move(j));
  }
  return json{{"attempt", v.attempt_id}, {"topic", v.topic},   {"index", v.index},
              {"score", v.score},        {"passed", v.passed}, {"late", v.late},
              {"parts", parts}};
}

json started_to_json(const StartedAttempt& s) {
  json questions = json::array();
  for (const auto& q : s.questions) questions.push_back(display_to_json(q));
  return json{{"attempt", s.attempt_id}, {"student", s.student_id}, {"topic", s.topic},
              {"index", s.index},        {"late", s.late},          {"resumed", s.resumed},
              {"locked_parts", s.locked_parts}, {"questions", questions}};
}

json status_to_json(const StudentStatus& s) {
  json topics = json::array();
  for (const auto& t : s.topics) {
    topics.push_back({{"topic", t.topic},
                      {"passed", t.passed},
                      {"passed_by_deadline", t.passed_by_deadline},
                      {"attempts", t.attempts},
                      {"best_score", t.best_score},
                      {"first_attempt_score",
                       t.first_attempt_score ? json(*t.first_attempt_score) : json()}});
  }
  return json{{"student", s.student_id},
              {"topics", topics},
              {"ept_score", s.ept_score},
              {"ept_mode", s.ept_mode}};
}

json followup_to_json(const FollowUpReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"student", row.student_id}, {"topic", row.topic}, {"attempts", row.attempts}});
  }
  return json{{"deadline", format_timestamp(r.deadline)}, {"rows", rows}};
}

json Session::to_json() const {
  json students = json::array();
  for (const auto& [id, stu] : students_) {
    json subtests = json::array();
    for (const auto& rec : stu.subtests) {
      json parts = json::array();
      for (const auto& p : rec.parts) {
        json pj{{"part", p.part_id}, {"seed", p.seed}, {"locked", p.locked}};
        if (p.best) pj["best"] = outcome_to_json(*p.best);
        if (p.locked) pj["locked_response"] = p.locked_response;
        parts.push_back(std::move(pj));
      }
      json attempts = json::array();
      for (const auto& a : rec.attempts) {
        json outcomes = json::object();
        for (const auto& [pid, o] : a.outcomes) outcomes[pid] = outcome_to_json(o);
        attempts.push_back({{"id", a.id},
                            {"index", a.index},
                            {"started", format_timestamp(a.started)},
                            {"submitted", a.submitted ? json(format_timestamp(*a.submitted)) : json()},
                            {"late", a.late},
                            {"responses", a.responses},
                            {"outcomes", outcomes},
                            {"score", a.score}});
      }
      subtests.push_back(
          {{"topic", topic_name(rec.topic)},
           {"passed", rec.passed},
           {"passed_by_deadline", rec.passed_by_deadline},
           {"first_attempt_score",
            rec.first_attempt_score ? json(*rec.first_attempt_score) : json()},
           {"attempts_to_pass", rec.attempts_to_pass ? json(*rec.attempts_to_pass) : json()},
           {"parts", parts},
           {"attempts", attempts}});
    }
    students.push_back({{"id", id}, {"token", stu.token}, {"subtests", subtests}});
  }
  return json{{"cohort", cohort_to_json(cohort_)},
              {"next_attempt", next_attempt_},
              {"students", students}};
}

}  // namespace prepmark
