#pragma once

#include <stdexcept>
#include <string>

namespace tokengraft {

// Base for every error the library raises. The CLI maps subclasses onto exit
// codes, so new error kinds should derive from one of the three below.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user-supplied configuration (vocab size too small, temperature <= 0, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data: files, corpora, ids.
class FormatError : public Error {
 public:
  using Error::Error;
};

// A precondition the caller controls was violated on data that parsed fine
// (empty training corpus, empty kNN index, dimension mismatch).
class InputError : public Error {
 public:
  using Error::Error;
};

// Internal invariant broken. Always a bug.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace tokengraft
