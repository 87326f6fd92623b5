#pragma once

#include <stdexcept>
#include <string>

namespace grlforge {

// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Rejected input: tensor/image dimensions do not conform.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Rejected input: a value is out of its documented range.
class ValueError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration (bad field combination, unknown preset, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Filesystem-level failure: missing file, short read, failed write.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed file content; message carries a line number or byte offset.
class ParseError : public IoError {
 public:
  using IoError::IoError;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Copy-move region sampling could not find a valid disjoint placement.
class PlacementError : public Error {
 public:
  using Error::Error;
};

}  // namespace grlforge
