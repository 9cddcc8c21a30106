#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace tdsmor {

/// Invalid argument: bad index, inconsistent dimensions, unknown name.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A request exceeding a configured size cap (Walsh order, dense solve, lifted dimension).
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Singular or ill-conditioned operators, non-convergent iterations, residual violations.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The operation is undefined for this system, e.g. Gramians of an unstable system.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Advisory diagnostics (stability, horizon certification). Defaults to stderr.
using WarningHandler = std::function<void(const std::string&)>;
void set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

}  // namespace tdsmor
