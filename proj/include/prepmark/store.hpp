#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>

#include "prepmark/session.hpp"

namespace prepmark {

namespace fs = std::filesystem;

// Files inside a store directory.
struct StoreLayout {
  fs::path root;

  fs::path bank() const { return root / "bank.json"; }
  fs::path cohort() const { return root / "cohort.json"; }
  fs::path events() const { return root / "events.jsonl"; }
  fs::path snapshot() const { return root / "snapshot.json"; }
  fs::path marks() const { return root / "ingest" / "marks.csv"; }
  fs::path quals() const { return root / "ingest" / "quals.csv"; }
  fs::path tariff() const { return root / "ingest" / "tariff.json"; }
};

// Creates the directory and copies the bank and cohort config into it. An
// existing store keeps its files; a different bank or cohort is an error.
void init_store(const fs::path& dir, const fs::path& bank_path, const fs::path& cohort_path);

struct StoreOptions {
  bool fsync = true;  // fdatasync after every appended event
  // Events between snapshot rewrites; 0 rewrites only on flush and close.
  int snapshot_every = 32;
};

/// Event-sourced persistence for one cohort.
///
/// events.jsonl is append-only with one event per enrolment, started attempt
/// and submitted attempt. snapshot.json is derived from it: rewritten every
/// few events, on write_snapshot() and on close, and rebuilt on open, so a
/// crash between the two writes loses nothing. A partially written final
/// line is discarded on open.
///
/// Thread-safe. Grading runs under a shared lock; writes to one student are
/// serialized by a per-student mutex.
class Store {
 public:
  explicit Store(const fs::path& dir, StoreOptions options = {});
  ~Store();

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  const StoreLayout& layout() const { return layout_; }
  const Bank& bank() const { return session_->bank(); }
  const CohortConfig& cohort() const { return session_->cohort(); }

  void enroll(const std::string& student_id, const std::string& token, Timestamp now);
  StartedAttempt start_attempt(const std::string& student_id, Topic topic, Timestamp now);
  FeedbackView submit(const std::string& attempt_id, const std::map<std::string, json>& responses,
                      Timestamp now);

  std::optional<std::string> student_for_token(const std::string& token) const;
  std::string student_for_attempt(const std::string& attempt_id) const;
  std::vector<std::string> student_ids() const;
  bool has_student(const std::string& student_id) const;
  StudentStatus status(const std::string& student_id) const;
  FollowUpReport follow_up_report(Timestamp now) const;
  std::uint64_t event_count() const;

  // Runs f(session) under the shared lock.
  template <typename F>
  auto read(F&& f) const {
    std::shared_lock lock(state_mutex_);
    return f(static_cast<const Session&>(*session_));
  }

  void write_snapshot();  // flush
  std::string snapshot_text() const;

  // Test hook: runs after an event is durable and before it is applied.
  std::function<void(const json& event)> after_append_hook;

 private:
  std::mutex& student_mutex(const std::string& student_id);
  void append(json event);
  void write_snapshot_locked();
  void after_event_locked();

  StoreLayout layout_;
  StoreOptions options_;
  std::unique_ptr<Session> session_;
  std::uint64_t seq_ = 0;
  std::uint64_t snapshot_seq_ = 0;
  int fd_ = -1;

  mutable std::shared_mutex state_mutex_;
  std::mutex student_mutexes_guard_;
  std::map<std::string, std::unique_ptr<std::mutex>> student_mutexes_;
};

// Canonical snapshot text for a session at a given event count.
std::string snapshot_document(const Session& s, std::uint64_t seq);

// Rebuilds a session from the event log in `dir`. Throws StoreCorrupt when an
// event cannot be applied.
std::pair<std::unique_ptr<Session>, std::uint64_t> replay(const fs::path& dir);

// True iff replaying the log reproduces snapshot.json byte for byte.
bool replay_verify(const fs::path& dir);

}  // namespace prepmark
