#pragma once

#include <stdexcept>
#include <string>

namespace crs {

// Process exit codes used by the command line tool.
enum class ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kDataError = 3,
  kUndefinedMetric = 4,
};

/// Invalid configuration or arguments.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed, missing or inconsistent input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A metric has no defined value on the given cohort (e.g. AUC on one class).
class UndefinedMetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace crs
