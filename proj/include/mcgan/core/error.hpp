#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mcgan {

/// Error categories. The numeric values double as CLI exit codes.
enum class ErrorKind : int {
  internal = 1,
  config = 2,
  io = 3,
  load = 4,
  input = 5,
  numeric = 6,
  shape = 7,
};

std::string_view error_kind_name(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

/// Invalid configuration value or out-of-range argument.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

/// Tensor or image dimensions that violate an operation's contract.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorKind::shape, what) {}
};

/// Missing or unreadable file.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

/// Corrupt, truncated, or version-mismatched checkpoint.
class LoadError : public Error {
 public:
  explicit LoadError(const std::string& what) : Error(ErrorKind::load, what) {}
};

/// Inconsistent user inputs (e.g. prediction/ground-truth count mismatch).
class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorKind::input, what) {}
};

/// Non-finite loss or parameter during training.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

/// Augmentation that would destroy too much of the frame.
class DegenerateAugmentationError : public ConfigError {
 public:
  explicit DegenerateAugmentationError(const std::string& what) : ConfigError(what) {}
};

}  // namespace mcgan
