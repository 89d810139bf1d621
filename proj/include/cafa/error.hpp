#ifndef CAFA_ERROR_HPP
#define CAFA_ERROR_HPP

#include <stdexcept>
#include <string>

namespace cafa {

// Broad failure category. The CLI maps each one to a process exit code.
enum class ErrorKind {
  kUsage,        // bad arguments or configuration (exit 2)
  kData,         // ingestion / schema / instance validation (exit 3)
  kModel,        // training, prediction or model file problems (exit 4)
  kExplanation,  // sampler, explainers, surrogate (exit 5)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct UsageError : Error {
  explicit UsageError(const std::string& what) : Error(ErrorKind::kUsage, what) {}
};

struct DataError : Error {
  explicit DataError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

struct ModelError : Error {
  explicit ModelError(const std::string& what) : Error(ErrorKind::kModel, what) {}
};

struct ExplanationError : Error {
  explicit ExplanationError(const std::string& what)
      : Error(ErrorKind::kExplanation, what) {}
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return 2;
    case ErrorKind::kData: return 3;
    case ErrorKind::kModel: return 4;
    case ErrorKind::kExplanation: return 5;
  }
  return 1;
}

}  // namespace cafa

#endif  // CAFA_ERROR_HPP
