#ifndef SUFFICE_ERRORS_HPP
#define SUFFICE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace suffice {

/// Bad input values, shapes, or contract violations detected up front.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// CSV/JSON structure problems: missing columns, unknown fields, bad types.
class SchemaError : public ValidationError {
 public:
  explicit SchemaError(const std::string& what) : ValidationError(what) {}
};

/// Experiment configuration that cannot be satisfied (e.g. an outer batch
/// too small to contain every group).
class ConfigurationError : public ValidationError {
 public:
  explicit ConfigurationError(const std::string& what) : ValidationError(what) {}
};

/// An evaluation batch that is missing a required group.
class DegenerateBatchError : public std::runtime_error {
 public:
  explicit DegenerateBatchError(const std::string& what) : std::runtime_error(what) {}
};

/// Inclusion probabilities collapsed so far that no usable mask can be drawn.
class DegenerateProbabilitiesError : public std::runtime_error {
 public:
  explicit DegenerateProbabilitiesError(const std::string& what)
      : std::runtime_error(what) {}
};

/// A fairness metric whose conditional cells are all empty.
class MetricUndefinedError : public std::runtime_error {
 public:
  explicit MetricUndefinedError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem failures while reading inputs or writing results.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace suffice

#endif  // SUFFICE_ERRORS_HPP
