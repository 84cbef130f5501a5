#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace curvbco {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point outside (or on the boundary of) the open domain of a barrier.
class DomainViolation : public Error {
 public:
  DomainViolation(const std::string& what, double slack)
      : Error(what + " (slack " + std::to_string(slack) + ")"), slack_(slack) {}
  double slack() const { return slack_; }

 private:
  double slack_;
};

/// A matrix that should be SPD is not (numerically).
class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, double min_eigenvalue)
      : Error(what + " (min eigenvalue " + std::to_string(min_eigenvalue) + ")"),
        min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

class BracketingError : public Error {
 public:
  using Error::Error;
};

/// Newton failure; carries the decrement history for diagnosis.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::vector<double> decrements = {})
      : Error(what), decrements_(std::move(decrements)) {}
  const std::vector<double>& decrements() const { return decrements_; }

 private:
  std::vector<double> decrements_;
};

/// Invalid configuration. `path` names the offending field when known.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::string path = {})
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class InvariantViolation : public Error {
 public:
  using Error::Error;
};

/// Bandit protocol misuse, e.g. asking for sigma_t before playing round t.
class FeedbackOrderError : public Error {
 public:
  using Error::Error;
};

}  // namespace curvbco
