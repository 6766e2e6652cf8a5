#pragma once

// Shared helpers for tests that need the seed data, scratch directories or
// the feedback leak scan.

#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "prepmark/error.hpp"
#include "prepmark/expr.hpp"
#include "prepmark/questionbank.hpp"
#include "prepmark/session.hpp"

namespace prepmark::testing {

namespace fs = std::filesystem;

inline std::string data_path(const std::string& name) { return std::string(PREPMARK_DATA_DIR) + "/" + name; }

inline std::shared_ptr<const Bank> seed_bank() {
  static auto bank = std::make_shared<const Bank>(load_bank(data_path("seed_bank.json")));
  return bank;
}

inline CohortConfig seed_cohort() { return load_cohort(data_path("cohort.json")); }

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "prepmark-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

struct Leak {
  std::string part_id;
  std::string field;
  std::string answer;
};

/// Scans the wrong parts of a feedback view for the part's answer strings.
///
/// Every string field is scanned for every answer string; the whole
/// serialized part (minus the diagnostic) is scanned for answers of three or
/// more characters. The parser diagnostic is about the student's own input,
/// so it must equal the syntax error of that input instead.
inline std::vector<Leak> scan_for_leaks(const Session& s, const std::string& student,
                                        const FeedbackView& view,
                                        const std::map<std::string, json>& responses) {
  std::vector<Leak> leaks;
  const json doc = feedback_to_json(view);
  for (std::size_t i = 0; i < view.parts.size(); ++i) {
    const PartFeedback& p = view.parts[i];
    if (p.correct || p.carried) continue;
    const auto answers = answer_strings(s.instance_part(student, p.part_id));
    std::vector<std::pair<std::string, std::string>> fields{
        {"feedback_key", p.feedback_key}, {"hint", p.text}};
    for (const auto& f : p.flags) fields.emplace_back("flag", f);
    for (const auto& l : p.links) fields.emplace_back("link", l);
    for (const auto& l : p.module_links) fields.emplace_back("module_link", l);
    for (const auto& [name, value] : fields) {
      for (const auto& a : answers) {
        if (!a.empty() && value.find(a) != std::string::npos) leaks.push_back({p.part_id, name, a});
      }
    }
    json part = doc["parts"][i];
    part.erase("diagnostic");
    part.erase("score");
    const std::string text = part.dump();
    for (const auto& a : answers) {
      if (a.size() >= 3 && text.find(a) != std::string::npos) leaks.push_back({p.part_id, "json", a});
    }
    if (!p.diagnostic.empty()) {
      std::optional<std::string> syntax;
      auto it = responses.find(p.part_id);
      if (it != responses.end() && it->second.is_string()) {
        try {
          parse(it->second.get<std::string>());
        } catch (const SyntaxError& e) {
          syntax = e.what();
        }
      }
      if (syntax) {
        if (p.diagnostic != *syntax) leaks.push_back({p.part_id, "diagnostic", p.diagnostic});
      } else {
        for (const auto& a : answers) {
          if (p.diagnostic.find(a) != std::string::npos) leaks.push_back({p.part_id, "diagnostic", a});
        }
      }
    }
  }
  return leaks;
}

}  // namespace prepmark::testing
