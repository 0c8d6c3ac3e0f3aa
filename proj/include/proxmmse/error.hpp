#pragma once

#include <stdexcept>
#include <string>

namespace proxmmse {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A point lies outside the domain of a model or prior.
class DomainError : public Error {
public:
    DomainError(const std::string& what, int coordinate = -1)
        : Error(what), coordinate_(coordinate) {}
    int coordinate() const noexcept { return coordinate_; }

private:
    int coordinate_;
};

/// A log-gradient was requested at a point where log q is not differentiable.
class KinkError : public Error {
public:
    using Error::Error;
};

/// q_P(y) vanishes (below the support threshold) at the query point.
class OutsideSupportError : public Error {
public:
    using Error::Error;
};

class QuadratureError : public Error {
public:
    QuadratureError(const std::string& what, double achieved)
        : Error(what), achieved_(achieved) {}
    /// Estimated relative error reached before giving up.
    double achieved_tolerance() const noexcept { return achieved_; }

private:
    double achieved_;
};

/// Dimension mismatch or malformed argument.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A query fell outside the range a table was built on.
class ExtrapolationError : public Error {
public:
    using Error::Error;
};

/// Raised by the configuration reader; message names the section/key or line.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace proxmmse
