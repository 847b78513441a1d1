#pragma once

#include <stdexcept>
#include <string>

namespace wban {

/// A caller broke a documented precondition (e.g. backoff stage out of range).
class ContractViolation : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Configuration or scenario failed validation. `field()` names the offending entry.
class ValidationError : public std::invalid_argument {
public:
  ValidationError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

/// Access phase cannot host the backoff procedure (counter would be locked forever).
class InfeasiblePhaseError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Numerically degenerate model input (rho = 0, P_idle_i = 0, ...).
class DegenerateInputError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

class ConvergenceError : public std::runtime_error {
public:
  ConvergenceError(const std::string& what, int iterations, double residual)
      : std::runtime_error(what), iterations_(iterations), residual_(residual) {}

  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

private:
  int iterations_;
  double residual_;
};

}  // namespace wban
