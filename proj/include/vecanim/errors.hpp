#pragma once

#include <stdexcept>
#include <string>

namespace vecanim {

// Argument outside an operation's domain (bad parameter, shape mismatch).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Linear system without a unique solution (degenerate triangle).
class SingularError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be read or written; the message names the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input document (JSON, SVG, image header).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// SVG content outside the supported M/C/Z filled-path subset.
class UnsupportedFeatureError : public ParseError {
 public:
  using ParseError::ParseError;
};

// Numerical failure inside an iterative procedure (NaN gradients, no data).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vecanim
