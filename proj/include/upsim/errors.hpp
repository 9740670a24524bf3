#pragma once

#include <stdexcept>
#include <string>

namespace upsim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad argument value or out-of-range index.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Inconsistent matrix dimensions or an otherwise malformed linear model.
class InvalidModelError : public Error {
public:
    using Error::Error;
};

/// A rational function was evaluated on (or numerically at) a pole.
class PoleEvaluationError : public Error {
public:
    using Error::Error;
};

/// The switched simulator could not resolve a consistent switch state.
class SimulationError : public Error {
public:
    using Error::Error;
};

/// Quantity undefined for the given data (zero fundamental, zero apparent power).
class UndefinedQuantityError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration document. Carries the offending line and key.
class ConfigError : public Error {
public:
    ConfigError(int line, std::string key, const std::string& what)
        : Error(format(line, key, what)), line_(line), key_(std::move(key)) {}

    int line() const noexcept { return line_; }
    const std::string& key() const noexcept { return key_; }

private:
    static std::string format(int line, const std::string& key, const std::string& what) {
        std::string msg = "config";
        if (line > 0) msg += " line " + std::to_string(line);
        if (!key.empty()) msg += " key '" + key + "'";
        return msg + ": " + what;
    }

    int line_;
    std::string key_;
};

}  // namespace upsim
