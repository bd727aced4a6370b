#pragma once

#include <stdexcept>
#include <string>

namespace qmadrc {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A physical or controller parameter is outside its admissible range.
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// A runtime input (rotor speeds, measurements) is outside its domain.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Configuration problem: singular mixer, non-Hurwitz observer, bad config file.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// The integrator produced a non-finite derivative.
class IntegrationFailure : public Error {
public:
    IntegrationFailure(const std::string& what, double time)
        : Error(what + " at t=" + std::to_string(time)), time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

/// A state component exceeded the divergence threshold.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, double time)
        : Error(what + " at t=" + std::to_string(time)), time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

}  // namespace qmadrc
