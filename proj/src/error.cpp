#include "prepmark/error.hpp"

#include <fmt/format.h>

namespace prepmark {

Error::Error(std::string code, const std::string& message)
    : std::runtime_error(message), code_(std::move(code)) {}

SyntaxError::SyntaxError(std::size_t offset, std::string hint)
    : Error(errc::kSyntax,
            fmt::format("syntax error at position {}: {}", offset, hint)),
      offset_(offset),
      hint_(std::move(hint)) {}

}  // namespace prepmark
