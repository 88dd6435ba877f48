#pragma once

#include <stdexcept>
#include <string>

namespace escl {

// Every failure raised by the library derives from Error. The CLI maps the
// category to its exit code: 1 usage/config, 2 data, 3 numeric.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid hyperparameter or configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Shapes or lengths that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Inputs that make a quantity undefined: zero-norm vectors, constant lists.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// Empty or otherwise invalid user input (sentences, token ids).
class InputError : public Error {
 public:
  using Error::Error;
};

// Malformed files and I/O failures.
class DataError : public Error {
 public:
  using Error::Error;
};

// NaN / Inf produced during evaluation or training.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace escl
