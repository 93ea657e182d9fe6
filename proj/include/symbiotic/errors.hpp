#pragma once

#include <stdexcept>
#include <string>

namespace symbiotic {

// Base class for all library errors. Subclasses map onto CLI exit codes:
// usage/config-file problems -> 2, data/shape/value problems -> 3,
// training divergence -> 4.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error("shape error: " + msg) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error("config error: " + msg) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& msg) : Error("usage error: " + msg) {}
};

class DegenerateBatchError : public Error {
 public:
  explicit DegenerateBatchError(const std::string& msg)
      : Error("degenerate batch: " + msg) {}
};

class EmptyLossError : public Error {
 public:
  explicit EmptyLossError(const std::string& msg) : Error("empty loss: " + msg) {}
};

class CorruptDatasetError : public Error {
 public:
  explicit CorruptDatasetError(const std::string& msg)
      : Error("corrupt dataset: " + msg) {}
};

class VersionError : public Error {
 public:
  explicit VersionError(const std::string& msg) : Error("version error: " + msg) {}
};

class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& msg) : Error("divergence: " + msg) {}
};

class UndefinedMetricError : public Error {
 public:
  explicit UndefinedMetricError(const std::string& msg)
      : Error("undefined metric: " + msg) {}
};

class LabelRangeError : public Error {
 public:
  explicit LabelRangeError(const std::string& msg)
      : Error("label out of range: " + msg) {}
};

class AlignmentError : public Error {
 public:
  explicit AlignmentError(const std::string& msg) : Error("alignment error: " + msg) {}
};

}  // namespace symbiotic
