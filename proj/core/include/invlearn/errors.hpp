#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace invlearn {

/// A parameter lies outside the mathematical domain of an operation
/// (negative power, nonpositive shift, lambda <= 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Inputs disagree in shape or length.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A parameter vector left the domain D(A) of a forward model.
class DomainViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EigensolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterate became non-finite or exceeded the divergence guard.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

/// Monte Carlo sampling produced no usable sample.
class DegenerateSampling : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Experiment configuration failed validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace invlearn
