#pragma once

#include <stdexcept>
#include <string>

namespace ssvep {

// Base for every error raised by the library. The CLI maps any of these to a
// nonzero exit code with the message on stderr.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad magic, unsupported version, malformed header.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Header and payload disagree (truncated or padded files).
class CorruptionError : public Error {
 public:
  using Error::Error;
};

// Payload values violate an invariant (non-finite samples, etc.).
class DataError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class DesignError : public Error {
 public:
  using Error::Error;
};

// Parameters or checkpoints do not match the expected network shape.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ssvep
