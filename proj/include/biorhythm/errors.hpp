#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace biorhythm {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (CSV or key-value files).
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input that violates a cohort-level invariant (e.g. duplicate user-days).
class IngestionError : public Error {
 public:
  using Error::Error;
};

/// Unknown user or key.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Not enough observations to compute a metric.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Invalid or unknown configuration entry.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// OOS growth with an empty before-window outlier tail.
class UndefinedGrowthError : public Error {
 public:
  using Error::Error;
};

/// Silhouette requested for fewer than two clusters.
class UndefinedSilhouetteError : public Error {
 public:
  using Error::Error;
};

}  // namespace biorhythm
