#ifndef LEXFORGE_ERROR_HPP
#define LEXFORGE_ERROR_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lexforge {

enum class ErrorKind {
  kMalformedRecord,
  kMissingCaseBody,
  kDuplicateCaseId,
  kIoError,
  kInvalidSpec,
  kDuplicateToken,
  kMissingSpecial,
  kLengthTooSmall,
  kTooFewDocuments,
  kNoMaskablePosition,
  kUnmappedTag,
  kTokenMismatch,
  kFormatError,
  kInvalidRule,
  kLengthMismatch,
  kUnknownLabel,
  kEmptyMatrix,
  kShapeMismatch,
  kInvalidConfig,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kMalformedRecord: return "MalformedRecord";
    case ErrorKind::kMissingCaseBody: return "MissingCaseBody";
    case ErrorKind::kDuplicateCaseId: return "DuplicateCaseId";
    case ErrorKind::kIoError: return "IoError";
    case ErrorKind::kInvalidSpec: return "InvalidSpec";
    case ErrorKind::kDuplicateToken: return "DuplicateToken";
    case ErrorKind::kMissingSpecial: return "MissingSpecial";
    case ErrorKind::kLengthTooSmall: return "LengthTooSmall";
    case ErrorKind::kTooFewDocuments: return "TooFewDocuments";
    case ErrorKind::kNoMaskablePosition: return "NoMaskablePosition";
    case ErrorKind::kUnmappedTag: return "UnmappedTag";
    case ErrorKind::kTokenMismatch: return "TokenMismatch";
    case ErrorKind::kFormatError: return "FormatError";
    case ErrorKind::kInvalidRule: return "InvalidRule";
    case ErrorKind::kLengthMismatch: return "LengthMismatch";
    case ErrorKind::kUnknownLabel: return "UnknownLabel";
    case ErrorKind::kEmptyMatrix: return "EmptyMatrix";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kInvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

// Single exception type for the toolkit. `kind` is what callers switch on;
// `offset` carries a byte offset or a 1-based line number depending on kind
// (negative when not applicable).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::int64_t offset = -1)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        offset_(offset) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::int64_t offset() const noexcept { return offset_; }

  // I/O failures map to exit code 2, everything else to 1.
  bool is_io() const noexcept { return kind_ == ErrorKind::kIoError; }

 private:
  ErrorKind kind_;
  std::int64_t offset_;
};

}  // namespace lexforge

#endif  // LEXFORGE_ERROR_HPP
