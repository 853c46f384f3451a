#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace cavity {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid or inconsistent configuration (bad bounds, unknown keys, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Config text that could not be parsed. Carries the offending key and line.
class ParseError : public ConfigError {
 public:
  ParseError(const std::string& key, std::size_t line, const std::string& what)
      : ConfigError("line " + std::to_string(line) + ", key '" + key + "': " + what),
        key_(key),
        line_(line) {}

  const std::string& key() const noexcept { return key_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string key_;
  std::size_t line_;
};

/// NaN or overflow encountered while stepping a trajectory.
class IntegrationDiverged : public std::runtime_error {
 public:
  IntegrationDiverged(std::size_t step, double t, const std::string& context = {})
      : std::runtime_error("integration diverged at step " + std::to_string(step) +
                           " (t=" + std::to_string(t) + ")" +
                           (context.empty() ? std::string{} : " " + context)),
        step_(step),
        t_(t) {}

  std::size_t step() const noexcept { return step_; }
  double time() const noexcept { return t_; }

 private:
  std::size_t step_;
  double t_;
};

/// A statistic was requested for a direction with too few samples.
class MissingData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Forward and reversed histograms share fewer bins than a fit needs.
class InsufficientOverlap : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input file does not conform to its documented schema.
/// Carries the offending column name.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& column, const std::string& what)
      : std::runtime_error("column '" + column + "': " + what), column_(column) {}

  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cavity
