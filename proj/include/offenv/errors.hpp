#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace offenv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model, policy or occupancy violates one of its invariants.
class InvalidModel : public Error {
 public:
  using Error::Error;
};

/// A dense linear solve failed or was too badly conditioned to trust.
class SingularSystem : public Error {
 public:
  using Error::Error;
};

/// A density ratio was requested where the denominator has no mass.
class CoverageError : public Error {
 public:
  CoverageError(const std::string& what, std::vector<std::pair<int, int>> pairs)
      : Error(what), pairs_(std::move(pairs)) {}

  /// Offending (state, action) pairs.
  const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }

 private:
  std::vector<std::pair<int, int>> pairs_;
};

/// A dataset or measure came from the wrong distribution for this estimator.
class SourceMismatch : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A saddle-point iteration blew up.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace offenv
