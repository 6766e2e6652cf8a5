#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace prepmark {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFindings = 1;  // validation or grading findings, domain errors
inline constexpr int kExitUsage = 2;     // bad arguments, missing files

// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace prepmark
