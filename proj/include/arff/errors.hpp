#pragma once

#include <stdexcept>
#include <string>

namespace arff {

/// A caller violated a documented precondition (shapes, ranges, sizes).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Factorization of the normal-equation matrix failed.
class SingularSystemError : public std::runtime_error {
 public:
  SingularSystemError(const std::string& what, long pivot) : std::runtime_error(what), pivot_(pivot) {}
  /// Zero-based index of the first non-positive pivot.
  long pivot() const noexcept { return pivot_; }

 private:
  long pivot_;
};

/// Data cannot be normalized (zero variance in a component).
class DegenerateDataError : public std::runtime_error {
 public:
  DegenerateDataError(const std::string& what, std::string component)
      : std::runtime_error(what), component_(std::move(component)) {}
  const std::string& component() const noexcept { return component_; }

 private:
  std::string component_;
};

/// A numerical procedure failed to reach its requested tolerance.
class AccuracyError : public std::runtime_error {
 public:
  AccuracyError(const std::string& what, double achieved) : std::runtime_error(what), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// Invalid experiment or algorithm configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace arff
