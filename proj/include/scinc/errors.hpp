#pragma once

#include <stdexcept>
#include <string>

namespace scinc {

// Error taxonomy shared by the library and the CLI. Each kind maps to one
// process exit code (see exit_code()).
enum class ErrorKind { Usage, Domain, Numeric, Convergence, Capability, Budget };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct UsageError : Error {
  explicit UsageError(const std::string& w) : Error(ErrorKind::Usage, w) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorKind::Domain, w) {}
};
struct NumericError : Error {
  NumericError(const std::string& w, double condition = 0.0)
      : Error(ErrorKind::Numeric, w), condition_estimate(condition) {}
  double condition_estimate;
};
struct ConvergenceError : Error {
  ConvergenceError(const std::string& w, double best)
      : Error(ErrorKind::Convergence, w), best_delta(best) {}
  double best_delta;
};
struct CapabilityError : Error {
  explicit CapabilityError(const std::string& w) : Error(ErrorKind::Capability, w) {}
};
struct BudgetError : Error {
  explicit BudgetError(const std::string& w) : Error(ErrorKind::Budget, w) {}
};

// 0 ok, 1 usage, 2 budget exceeded, 3 domain/numeric trouble.
inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage: return 1;
    case ErrorKind::Budget: return 2;
    default: return 3;
  }
}

}  // namespace scinc
