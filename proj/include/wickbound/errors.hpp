#pragma once

#include <stdexcept>
#include <string>

namespace wickbound {

/// Enumeration would exceed the configured element guard.
class CombinatorialBlowup : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested moment or cumulant order exceeds what the provider supports.
class OrderOverflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownSite : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Spectrum triple does not define a positive semi-definite covariance.
class PsdViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NoGeneratingFunction : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Bad user input: config files, observables, checks whose preconditions fail.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace wickbound
