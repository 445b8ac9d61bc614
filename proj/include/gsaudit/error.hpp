#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gsaudit {

/// Base of every error thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raw dataset could not be ingested (missing file, malformed line, bad value).
class IngestError : public Error {
 public:
  using Error::Error;
};

/// Input outside an operation's mathematical domain (empty corpus, one class).
class DomainError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration: bad flags, stereotype model, grid or schema.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Feature dimension disagrees with a fitted model.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver stopped without meeting its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Statistical degeneracy: rank deficiency or (quasi-)complete separation.
/// Carries the offending design columns.
class DegeneracyError : public Error {
 public:
  DegeneracyError(const std::string& what, std::vector<std::string> columns)
      : Error(what), columns_(std::move(columns)) {}

  const std::vector<std::string>& columns() const noexcept { return columns_; }

 private:
  std::vector<std::string> columns_;
};

}  // namespace gsaudit
