#include "prepmark/ingest.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "prepmark/error.hpp"

namespace prepmark {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

// Calls row(cells, lineno) for each data row after checking the header.
template <typename F>
void for_each_row(const std::string& text, const std::vector<std::string>& header, F row) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (!seen_header) {
      if (cells != header) {
        throw Error(errc::kFileFormat, fmt::format("line {}: expected header '{}'", lineno,
                                                   fmt::join(header, ",")));
      }
      seen_header = true;
      continue;
    }
    if (cells.size() != header.size()) {
      throw Error(errc::kFileFormat,
                  fmt::format("line {}: expected {} fields, got {}", lineno, header.size(), cells.size()));
    }
    if (cells[0].empty()) throw Error(errc::kFileFormat, fmt::format("line {}: empty student id", lineno));
    try {
      row(cells, lineno);
    } catch (const Error& e) {
      if (e.code() == errc::kFileFormat) throw;
      throw Error(errc::kFileFormat, fmt::format("line {}: {}", lineno, e.what()));
    }
  }
  if (!seen_header) throw Error(errc::kFileFormat, "missing header row");
}

double parse_number(const std::string& s, int lineno) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw Error(errc::kFileFormat, fmt::format("line {}: '{}' is not a number", lineno, s));
  }
  return v;
}

}  // namespace

MarkTable parse_marks_csv(const std::string& text) {
  MarkTable out;
  for_each_row(text, {"student_id", "module", "mark"}, [&](const auto& c, int lineno) {
    if (c[1].empty()) throw Error(errc::kFileFormat, fmt::format("line {}: empty module", lineno));
    auto& slot = out[c[0]][c[1]];
    if (!c[2].empty()) slot = parse_number(c[2], lineno);
  });
  return out;
}

QualificationTable parse_quals_csv(const std::string& text) {
  QualificationTable out;
  for_each_row(text, {"student_id", "kind", "subject_tag", "grade"}, [&](const auto& c, int) {
    out[c[0]].push_back({c[1], subject_tag_from_name(c[2]), c[3]});
  });
  return out;
}

std::map<std::string, double> parse_ept_csv(const std::string& text) {
  std::map<std::string, double> out;
  for_each_row(text, {"student_id", "ept_score"},
               [&](const auto& c, int lineno) { out[c[0]] = parse_number(c[1], lineno); });
  return out;
}

std::string marks_to_csv(const MarkTable& marks) {
  std::string out = "student_id,module,mark\n";
  for (const auto& [id, modules] : marks) {
    for (const auto& [module, mark] : modules) {
      out += fmt::format("{},{},{}\n", id, module, mark ? fmt::format("{:g}", *mark) : "");
    }
  }
  return out;
}

std::string quals_to_csv(const QualificationTable& quals) {
  std::string out = "student_id,kind,subject_tag,grade\n";
  for (const auto& [id, list] : quals) {
    for (const auto& q : list) {
      out += fmt::format("{},{},{},{}\n", id, q.kind, subject_tag_name(q.subject), q.grade);
    }
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(errc::kIo, "cannot write " + path);
  out << text;
  if (!out.flush()) throw Error(errc::kIo, "write failed: " + path);
}

std::vector<StudentOutcome> build_outcomes(const std::map<std::string, double>& ept,
                                           const MarkTable& marks,
                                           const QualificationTable& quals) {
  std::vector<StudentOutcome> out;
  for (const auto& [id, score] : ept) {
    StudentOutcome s;
    s.student_id = id;
    s.ept_score = score;
    if (auto it = quals.find(id); it != quals.end()) s.qualifications = it->second;
    if (auto it = marks.find(id); it != marks.end()) s.exam_marks = it->second;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace prepmark
