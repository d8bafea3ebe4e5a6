#pragma once

#include <stdexcept>
#include <string>

namespace gait {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value, unknown key, or inconsistent module setup.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Tensor shapes that do not satisfy an operation's contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A silhouette (or mask) with no foreground pixel.
class EmptyForeground : public Error {
 public:
  EmptyForeground() : Error("frame has no foreground pixels") {}
  using Error::Error;
};

/// Every frame of a sequence was rejected.
class EmptySequence : public Error {
 public:
  using Error::Error;
};

/// Missing or malformed files on disk.
class DataError : public Error {
 public:
  using Error::Error;
};

/// NaN or infinity where a finite value is required.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

}  // namespace gait
