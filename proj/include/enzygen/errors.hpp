#pragma once

#include <stdexcept>
#include <string>

namespace enzygen {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or rank mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input outside an operation's mathematical domain (e.g. ln of x <= 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A public operation produced NaN or Inf.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Caller violated an API precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class VocabularyError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

/// Dataset or record assembly failed an invariant.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace enzygen
