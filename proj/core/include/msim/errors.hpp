#pragma once

#include <stdexcept>
#include <string>

namespace msim {

/// Base for every error raised by the simulator library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A rank violated the one-sided / collective communication discipline
/// (access outside an epoch, unlock without lock, duplicate barrier, ...).
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// An experiment was configured in a way the model cannot run
/// (ineligible method/strategy pair, background transfer of variable data).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// The event queue drained while at least one stream was still blocked.
class DeadlockError : public Error {
public:
    using Error::Error;
};

} // namespace msim
