#pragma once

#include <stdexcept>
#include <string>

namespace coarsen {

/// Base class for every error the library raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input: an argument or configuration value outside its domain.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Malformed experiment configuration; the message names the field.
class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// A solver could not complete (step underflow, conservation violation, ...).
class SolverFailure : public Error {
public:
    using Error::Error;
};

}  // namespace coarsen
