#pragma once

#include <stdexcept>
#include <string>

namespace edusim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input to an operation (empty text, out-of-range parameter, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

// A structural invariant was violated (duplicate id, split overlap, ...).
class InvariantError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Network or remote-service failure, raised after retries are exhausted.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Scripted mock received a request that no scenario entry matches.
class UnscriptedError : public Error {
 public:
  using Error::Error;
};

}  // namespace edusim
