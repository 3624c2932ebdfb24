#ifndef GABI_ERRORS_HPP
#define GABI_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gabi {

/// Tensor/operator shape violations; message names the offending primitive.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

/// NaN/Inf detected where finite values are required.
class ValueError : public std::runtime_error {
 public:
  explicit ValueError(const std::string& msg) : std::runtime_error(msg) {}
};

/// File-format violations (bad magic, version, truncation).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Experiment configuration violations (unknown keys, bad values).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failures (singular systems, unmet solver tolerances).
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gabi

#endif  // GABI_ERRORS_HPP
