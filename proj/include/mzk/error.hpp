#pragma once

#include <stdexcept>
#include <string>

namespace mzk {

/// Base for every error raised by the library. `kind()` is a stable
/// machine-readable tag used in the CLI error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// Non-finite samples or an otherwise malformed field.
class InvalidFieldError : public Error {
 public:
  explicit InvalidFieldError(const std::string& what) : Error("invalid_field", what) {}
};

/// An argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("domain_error", what) {}
};

/// Caller violated a structural precondition (mismatched grids, bad windows).
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what) : Error("contract_error", what) {}
};

/// An iterative solver failed to converge or to bracket a root.
class SolverFailure : public Error {
 public:
  explicit SolverFailure(const std::string& what) : Error("solver_failure", what) {}
};

/// Integration accuracy monitor tripped (e.g. Hamiltonian drift).
class AccuracyError : public Error {
 public:
  explicit AccuracyError(const std::string& what) : Error("accuracy_error", what) {}
};

/// The state carries no scale (lambda = 0).
class DegenerateStateError : public Error {
 public:
  explicit DegenerateStateError(const std::string& what) : Error("degenerate_state", what) {}
};

/// Rate fit could not be carried out on the given series.
class FitFailure : public Error {
 public:
  explicit FitFailure(const std::string& what) : Error("fit_failure", what) {}
};

/// Malformed configuration text or command-line input.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config_error", what) {}
};

/// Reading or writing a file failed.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io_error", what) {}
};

}  // namespace mzk
