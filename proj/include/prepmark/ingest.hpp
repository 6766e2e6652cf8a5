#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prepmark/analytics.hpp"

namespace prepmark {

// student -> module -> mark; an empty mark cell means enrolled without a mark.
using MarkTable = std::map<std::string, std::map<std::string, std::optional<double>>>;
using QualificationTable = std::map<std::string, std::vector<Qualification>>;

// Comma-separated with a header row. Throw FileFormatError naming the line.
MarkTable parse_marks_csv(const std::string& text);                   // student_id,module,mark
QualificationTable parse_quals_csv(const std::string& text);          // student_id,kind,subject_tag,grade
std::map<std::string, double> parse_ept_csv(const std::string& text);  // student_id,ept_score

std::string marks_to_csv(const MarkTable& marks);
std::string quals_to_csv(const QualificationTable& quals);

std::string read_text_file(const std::string& path);  // IoError
void write_text_file(const std::string& path, const std::string& text);

// One outcome per student with an EPT score. Students without any marks row
// come out incomplete.
std::vector<StudentOutcome> build_outcomes(const std::map<std::string, double>& ept,
                                           const MarkTable& marks,
                                           const QualificationTable& quals);

}  // namespace prepmark
