#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace regobs {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point or support lies outside the spatial domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Matrix or vector sizes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A closed-form predicate does not apply to the given sensor; callers fall
/// back to the rank test.
class InapplicableError : public Error {
 public:
  using Error::Error;
};

/// Too few usable samples to fit an exponential.
class FitError : public Error {
 public:
  using Error::Error;
};

/// A simulated state exceeded the divergence bound.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double time)
      : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// The unstable part of the error dynamics cannot be stabilized by output
/// injection with the given sensors.
class NotDetectable : public Error {
 public:
  NotDetectable(const std::string& what, std::vector<std::size_t> offending)
      : Error(what), offending_(std::move(offending)) {}
  /// Indices into the unstable eigen-group list.
  const std::vector<std::size_t>& offending_groups() const noexcept {
    return offending_;
  }

 private:
  std::vector<std::size_t> offending_;
};

}  // namespace regobs
