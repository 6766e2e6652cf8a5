#include "prepmark/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "prepmark/error.hpp"
#include "prepmark/ingest.hpp"

namespace prepmark {
namespace {

[[noreturn]] void io_error(const std::string& what) {
  throw Error(errc::kIo, fmt::format("{}: {}", what, std::strerror(errno)));
}

[[noreturn]] void corrupt(std::uint64_t line, const std::string& what) {
  throw Error(errc::kStoreCorrupt, fmt::format("events.jsonl line {}: {}", line, what));
}

std::string file_or_empty(const fs::path& p) {
  return fs::exists(p) ? read_text_file(p.string()) : std::string();
}

void write_all(int fd, const std::string& data, const std::string& what) {
  std::size_t done = 0;
  while (done < data.size()) {
    const ssize_t n = ::write(fd, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      io_error(what);
    }
    done += static_cast<std::size_t>(n);
  }
}

// Complete lines of the log; a trailing line without '\n' is a torn write.
struct LogContents {
  std::vector<std::string> lines;
  std::size_t complete_bytes = 0;
};

LogContents read_log(const fs::path& path) {
  LogContents log;
  const std::string text = file_or_empty(path);
  std::size_t start = 0;
  while (true) {
    const auto nl = text.find('\n', start);
    if (nl == std::string::npos) break;
    log.lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  log.complete_bytes = start;
  return log;
}

std::shared_ptr<const Bank> load_store_bank(const StoreLayout& l) {
  if (!fs::exists(l.bank()) || !fs::exists(l.cohort())) {
    throw Error(errc::kIo, l.root.string() + " is not a store (bank.json or cohort.json missing)");
  }
  return std::make_shared<const Bank>(load_bank(l.bank().string()));
}

void apply_event(Session& s, const json& e, std::uint64_t line) {
  try {
    const std::string type = e.at("type").get<std::string>();
    const Timestamp at = parse_timestamp(e.at("at").get<std::string>());
    if (type == "enrolled") {
      s.enroll(e.at("student").get<std::string>(), e.at("token").get<std::string>());
    } else if (type == "attempt_started") {
      const std::string student = e.at("student").get<std::string>();
      const auto topic = topic_from_name(e.at("topic").get<std::string>());
      if (!topic) corrupt(line, "unknown topic");
      const StartedAttempt a = s.start_attempt(student, *topic, at);
      if (a.resumed || a.attempt_id != e.at("attempt").get<std::string>()) {
        corrupt(line, "attempt id does not match the replayed state");
      }
    } else if (type == "attempt_submitted") {
      const std::string attempt = e.at("attempt").get<std::string>();
      if (s.student_for_attempt(attempt) != e.at("student").get<std::string>()) {
        corrupt(line, "attempt belongs to another student");
      }
      std::map<std::string, json> responses;
      for (const auto& [k, v] : e.at("responses").items()) responses.emplace(k, v);
      s.submit(attempt, responses, at);
    } else {
      corrupt(line, "unknown event type '" + type + "'");
    }
  } catch (const json::exception& ex) {
    corrupt(line, ex.what());
  } catch (const Error& ex) {
    if (ex.code() == errc::kStoreCorrupt) throw;
    corrupt(line, ex.what());
  }
}

}  // namespace

void init_store(const fs::path& dir, const fs::path& bank_path, const fs::path& cohort_path) {
  const StoreLayout l{dir};
  std::error_code ec;
  fs::create_directories(l.root / "ingest", ec);
  if (ec) throw Error(errc::kIo, "cannot create " + dir.string() + ": " + ec.message());

  // both must parse and agree before anything is copied
  const std::string bank_text = read_text_file(bank_path.string());
  const std::string cohort_text = read_text_file(cohort_path.string());
  const Bank bank = load_bank(bank_path.string());
  load_cohort(cohort_path.string()).validate(bank);

  auto install = [](const fs::path& target, const std::string& text, const char* what) {
    if (fs::exists(target)) {
      if (read_text_file(target.string()) != text) {
        throw Error(errc::kInvalidArgument,
                    fmt::format("store already holds a different {} ({})", what, target.string()));
      }
      return;
    }
    write_text_file(target.string(), text);
  };
  install(l.bank(), bank_text, "bank");
  install(l.cohort(), cohort_text, "cohort config");
}

std::string snapshot_document(const Session& s, std::uint64_t seq) {
  json doc{{"seq", seq}, {"state", s.to_json()}};
  return doc.dump(1) + "\n";
}

std::pair<std::unique_ptr<Session>, std::uint64_t> replay(const fs::path& dir) {
  const StoreLayout l{dir};
  auto bank = load_store_bank(l);
  auto session = std::make_unique<Session>(bank, load_cohort(l.cohort().string()));
  const LogContents log = read_log(l.events());
  std::uint64_t seq = 0;
  for (std::size_t i = 0; i < log.lines.size(); ++i) {
    const std::uint64_t lineno = i + 1;
    json e;
    try {
      e = json::parse(log.lines[i]);
    } catch (const json::parse_error& ex) {
      corrupt(lineno, ex.what());
    }
    if (!e.is_object() || e.value("seq", std::uint64_t{0}) != seq + 1) {
      corrupt(lineno, fmt::format("expected seq {}", seq + 1));
    }
    apply_event(*session, e, lineno);
    seq += 1;
  }
  return {std::move(session), seq};
}

bool replay_verify(const fs::path& dir) {
  const StoreLayout l{dir};
  if (!fs::exists(l.snapshot())) return false;
  try {
    auto [session, seq] = replay(dir);
    return snapshot_document(*session, seq) == read_text_file(l.snapshot().string());
  } catch (const Error& e) {
    if (e.code() == errc::kStoreCorrupt) return false;
    throw;
  }
}

Store::Store(const fs::path& dir, StoreOptions options) : layout_{dir}, options_(options) {
  load_store_bank(layout_);  // fail early on a directory that is not a store
  fd_ = ::open(layout_.events().c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) io_error("cannot open " + layout_.events().string());
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw Error(errc::kStoreBusy, layout_.root.string() + " is open in another process");
  }
  try {
    // drop a torn final line before replaying
    const LogContents log = read_log(layout_.events());
    if (fs::file_size(layout_.events()) != log.complete_bytes) {
      fs::resize_file(layout_.events(), log.complete_bytes);
    }
    auto [session, seq] = replay(dir);
    session_ = std::move(session);
    seq_ = seq;
    write_snapshot_locked();
  } catch (...) {
    ::close(fd_);
    fd_ = -1;
    throw;
  }
}

Store::~Store() {
  if (!session_) return;
  try {
    std::unique_lock lock(state_mutex_);
    if (snapshot_seq_ != seq_) write_snapshot_locked();
  } catch (const std::exception&) {
    // the log is authoritative; the next open rebuilds the snapshot
  }
  if (fd_ >= 0) ::close(fd_);
}

void Store::after_event_locked() {
  if (options_.snapshot_every > 0 &&
      seq_ - snapshot_seq_ >= static_cast<std::uint64_t>(options_.snapshot_every)) {
    write_snapshot_locked();
  }
}

std::mutex& Store::student_mutex(const std::string& student_id) {
  std::lock_guard guard(student_mutexes_guard_);
  auto& slot = student_mutexes_[student_id];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

void Store::append(json event) {
  event["seq"] = seq_ + 1;
  write_all(fd_, event.dump() + "\n", "append to " + layout_.events().string());
  if (options_.fsync && ::fdatasync(fd_) != 0) io_error("fdatasync");
  seq_ += 1;
  if (after_append_hook) after_append_hook(event);
}

void Store::write_snapshot_locked() {
  const std::string text = snapshot_document(*session_, seq_);
  const fs::path tmp = layout_.snapshot().string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) io_error("cannot write " + tmp.string());
  try {
    write_all(fd, text, "write " + tmp.string());
    if (options_.fsync && ::fdatasync(fd) != 0) io_error("fdatasync");
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  std::error_code ec;
  fs::rename(tmp, layout_.snapshot(), ec);
  if (ec) throw Error(errc::kIo, "cannot replace snapshot: " + ec.message());
  snapshot_seq_ = seq_;
}

void Store::write_snapshot() {
  std::unique_lock lock(state_mutex_);
  write_snapshot_locked();
}

std::string Store::snapshot_text() const {
  std::shared_lock lock(state_mutex_);
  return snapshot_document(*session_, seq_);
}

void Store::enroll(const std::string& student_id, const std::string& token, Timestamp now) {
  std::unique_lock lock(state_mutex_);
  if (session_->has_student(student_id)) {
    throw Error(errc::kDuplicateStudent, "student '" + student_id + "' is already enrolled");
  }
  if (token.empty() || session_->student_for_token(token)) {
    throw Error(errc::kInvalidArgument, "token must be non-empty and unique");
  }
  if (student_id.empty()) throw Error(errc::kInvalidArgument, "student id must not be empty");
  append({{"type", "enrolled"}, {"at", format_timestamp(now)}, {"student", student_id}, {"token", token}});
  session_->enroll(student_id, token);
  after_event_locked();
}

StartedAttempt Store::start_attempt(const std::string& student_id, Topic topic, Timestamp now) {
  {
    std::shared_lock lock(state_mutex_);
    session_->student(student_id);
  }
  std::lock_guard student_lock(student_mutex(student_id));
  std::unique_lock lock(state_mutex_);
  const std::string id = session_->next_attempt_id(student_id, topic);
  bool open = false;
  for (const auto& st : session_->student(student_id).subtests) {
    if (st.topic == topic) open = st.open_attempt() != nullptr;
  }
  // resuming changes nothing, so it is not an event
  if (open) return session_->start_attempt(student_id, topic, now);
  append({{"type", "attempt_started"},
          {"at", format_timestamp(now)},
          {"student", student_id},
          {"topic", topic_name(topic)},
          {"attempt", id}});
  StartedAttempt a = session_->start_attempt(student_id, topic, now);
  after_event_locked();
  return a;
}

FeedbackView Store::submit(const std::string& attempt_id, const std::map<std::string, json>& responses,
                           Timestamp now) {
  const std::string student = student_for_attempt(attempt_id);
  std::lock_guard student_lock(student_mutex(student));
  PreparedSubmission prep;
  {
    std::shared_lock lock(state_mutex_);
    prep = session_->prepare_submit(attempt_id, responses, now);
  }
  std::unique_lock lock(state_mutex_);
  json recorded = json::object();
  for (const auto& [part, r] : prep.responses) recorded[part] = r;
  append({{"type", "attempt_submitted"},
          {"at", format_timestamp(now)},
          {"student", student},
          {"attempt", attempt_id},
          {"responses", recorded}});
  FeedbackView view = session_->apply_submit(prep);
  after_event_locked();
  return view;
}

std::optional<std::string> Store::student_for_token(const std::string& token) const {
  std::shared_lock lock(state_mutex_);
  return session_->student_for_token(token);
}

std::string Store::student_for_attempt(const std::string& attempt_id) const {
  std::shared_lock lock(state_mutex_);
  return session_->student_for_attempt(attempt_id);
}

std::vector<std::string> Store::student_ids() const {
  std::shared_lock lock(state_mutex_);
  return session_->student_ids();
}

bool Store::has_student(const std::string& student_id) const {
  std::shared_lock lock(state_mutex_);
  return session_->has_student(student_id);
}

StudentStatus Store::status(const std::string& student_id) const {
  std::shared_lock lock(state_mutex_);
  return session_->status(student_id);
}

FollowUpReport Store::follow_up_report(Timestamp now) const {
  std::shared_lock lock(state_mutex_);
  return session_->follow_up_report(now);
}

std::uint64_t Store::event_count() const {
  std::shared_lock lock(state_mutex_);
  return seq_;
}

}  // namespace prepmark
