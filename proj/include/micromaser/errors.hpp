#ifndef MICROMASER_ERRORS_HPP
#define MICROMASER_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace micromaser {

/// Probability mass in the top two Fock levels exceeded the guard.
class TruncationError : public std::runtime_error {
 public:
  TruncationError(const std::string& what, double tail_mass)
      : std::runtime_error(what), tail_mass_(tail_mass) {}
  double tail_mass() const noexcept { return tail_mass_; }

 private:
  double tail_mass_;
};

/// Trace drift or non-finite entries during time evolution.
class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> residuals)
      : std::runtime_error(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residual_history() const noexcept { return residuals_; }

 private:
  std::vector<double> residuals_;
};

/// A configuration or parameter value failed validation; `field()` names it.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace micromaser

#endif  // MICROMASER_ERRORS_HPP
