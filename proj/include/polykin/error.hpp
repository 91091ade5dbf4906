#pragma once

#include <stdexcept>
#include <string>

namespace polykin {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A value fell outside the admissible range of a function.
class OutOfRangeError : public Error {
public:
    enum class Bound { Lower, Upper };

    OutOfRangeError(const std::string& what, Bound bound) : Error(what), bound_(bound) {}

    Bound bound() const noexcept { return bound_; }

private:
    Bound bound_;
};

/// A configuration file is malformed: bad syntax, unknown key, wrong type.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A model or configuration violates a precondition.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Explicit time step exceeds a stability bound.
class StepSizeError : public Error {
public:
    using Error::Error;
};

/// Monomer level or density became negative or non-finite.
class BlowUpError : public Error {
public:
    using Error::Error;
};

/// Mass lost through the truncation boundary exceeded the tolerance.
class LeakOverflowError : public Error {
public:
    LeakOverflowError(const std::string& what, double x_max_suggested)
        : Error(what), x_max_suggested_(x_max_suggested) {}

    double x_max_suggested() const noexcept { return x_max_suggested_; }

private:
    double x_max_suggested_;
};

/// Mass balance drifted beyond the per-step tolerance.
class ConservationError : public Error {
public:
    using Error::Error;
};

/// Iterative solver failed to converge.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

} // namespace polykin
