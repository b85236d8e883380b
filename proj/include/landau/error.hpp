#pragma once

#include <stdexcept>
#include <string>

namespace landau {

/// Base class of all errors raised by the library.
class Error : public std::runtime_error
{
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration (violated precondition).
class ConfigError : public Error
{
 public:
  using Error::Error;
};

/// A numerical procedure did not reach its tolerance.
class NumericalError : public Error
{
 public:
  using Error::Error;
};

/// An internal invariant check failed.
class CheckError : public Error
{
 public:
  using Error::Error;
};

}  // namespace landau
