#pragma once

#include <stdexcept>
#include <string>

namespace floatlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    virtual const char* kind() const noexcept { return "error"; }
};

/// Adaptive quadrature ran out of subdivisions. Carries the best estimate.
class QuadratureError : public Error {
public:
    QuadratureError(const std::string& what, double estimate, double error_bound)
        : Error(what), estimate_(estimate), error_bound_(error_bound) {}
    const char* kind() const noexcept override { return "quadrature"; }
    double estimate() const noexcept { return estimate_; }
    double error_bound() const noexcept { return error_bound_; }

private:
    double estimate_;
    double error_bound_;
};

class BracketError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "bracket"; }
};

class DomainError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "domain"; }
};

/// A wet region or cut reaches outside the truncation ball.
class RegionError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "region"; }
};

class ConstructionError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "construction"; }
};

class NotCoerciveError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "not-coercive"; }
};

class ConvexityError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "convexity"; }
};

class SearchBoxError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "search-box"; }
};

class PreconditionError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "precondition"; }
};

class ParseError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "parse"; }
};

} // namespace floatlab
