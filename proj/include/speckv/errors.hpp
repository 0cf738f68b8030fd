#pragma once

#include <stdexcept>
#include <string>

namespace speckv {

// Error categories map onto distinct CLI exit codes (see tools/).
enum class ErrorKind {
  kInvalidArgument,
  kState,
  kNumeric,
  kIncompleteProfile,
  kValidation,
  kMalformed,
  kIntegrity,
  kIo,
  kUsage,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& w) : Error(ErrorKind::kInvalidArgument, w) {}
};
struct StateError : Error {
  explicit StateError(const std::string& w) : Error(ErrorKind::kState, w) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error(ErrorKind::kNumeric, w) {}
};
struct IncompleteProfileError : Error {
  explicit IncompleteProfileError(const std::string& w) : Error(ErrorKind::kIncompleteProfile, w) {}
};
struct ValidationError : Error {
  explicit ValidationError(const std::string& w) : Error(ErrorKind::kValidation, w) {}
};
struct MalformedFileError : Error {
  explicit MalformedFileError(const std::string& w) : Error(ErrorKind::kMalformed, w) {}
};
struct IntegrityError : Error {
  explicit IntegrityError(const std::string& w) : Error(ErrorKind::kIntegrity, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorKind::kIo, w) {}
};
struct UsageError : Error {
  explicit UsageError(const std::string& w) : Error(ErrorKind::kUsage, w) {}
};

}  // namespace speckv
