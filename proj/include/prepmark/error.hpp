#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace prepmark {

// Every error raised by the library carries a stable machine code. The
// service maps each code to exactly one HTTP status.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message);

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

// Raised by the expression parser. The message is shown verbatim to students
// as response feedback, so it must never mention the expected answer.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t offset, std::string hint);

  std::size_t offset() const noexcept { return offset_; }
  const std::string& hint() const noexcept { return hint_; }

 private:
  std::size_t offset_;
  std::string hint_;
};

namespace errc {
inline constexpr const char* kSyntax = "SyntaxError";
inline constexpr const char* kUnboundVariable = "UnboundVariable";
inline constexpr const char* kNonFiniteResult = "NonFiniteResult";
inline constexpr const char* kUnsupportedNode = "UnsupportedNode";
inline constexpr const char* kNotAPolynomial = "NotAPolynomial";
inline constexpr const char* kInsufficientSamples = "InsufficientSamples";
inline constexpr const char* kInvalidArgument = "InvalidArgument";
inline constexpr const char* kInvalidSpec = "InvalidSpec";
inline constexpr const char* kArmMismatch = "ArmMismatch";
inline constexpr const char* kUnknownOption = "UnknownOption";
inline constexpr const char* kNonConstantBinding = "NonConstantBinding";
inline constexpr const char* kConstraintUnsatisfiable = "ConstraintUnsatisfiable";
inline constexpr const char* kFileFormat = "FileFormatError";
inline constexpr const char* kUnknownTemplate = "UnknownTemplate";
inline constexpr const char* kUnknownStudent = "UnknownStudent";
inline constexpr const char* kUnknownTopic = "UnknownTopic";
inline constexpr const char* kUnknownAttempt = "UnknownAttempt";
inline constexpr const char* kNoOpenAttempt = "NoOpenAttempt";
inline constexpr const char* kDuplicateStudent = "DuplicateStudent";
inline constexpr const char* kNotYetDue = "NotYetDue";
inline constexpr const char* kDegenerateSample = "DegenerateSample";
inline constexpr const char* kUnknownGrade = "UnknownGrade";
inline constexpr const char* kStoreCorrupt = "StoreCorrupt";
inline constexpr const char* kIo = "IoError";
inline constexpr const char* kStoreBusy = "StoreBusy";
inline constexpr const char* kIngestMissing = "IngestMissing";
inline constexpr const char* kBadRequest = "BadRequest";
inline constexpr const char* kUnauthorized = "Unauthorized";
inline constexpr const char* kForbidden = "Forbidden";
inline constexpr const char* kNotFound = "NotFound";
}  // namespace errc

}  // namespace prepmark
