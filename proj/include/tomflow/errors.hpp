#ifndef TOMFLOW_ERRORS_HPP
#define TOMFLOW_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tomflow {

/// Base class of all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A constructor argument violates its precondition.
class InvalidParameterError : public Error {
public:
    using Error::Error;
};

/// Evaluation outside the admissible open interval of a closure.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Inverse requested for a value outside the closure's range.
class InverseRangeError : public DomainError {
public:
    using DomainError::DomainError;
};

/// An optional ingredient (H, V_eq, V_C, d3, ...) is required but absent.
class CapabilityError : public Error {
public:
    using Error::Error;
};

/// Non-positive density where a positive one is required.
class VacuumError : public Error {
public:
    using Error::Error;
};

class NoIntermediateStateError : public Error {
public:
    using Error::Error;
};

class OutOfFanError : public Error {
public:
    using Error::Error;
};

class DegenerateFieldError : public Error {
public:
    using Error::Error;
};

class InconsistentStateError : public Error {
public:
    using Error::Error;
};

/// Operation does not apply to this wave structure (e.g. delta_v on a shock).
class NotApplicableError : public Error {
public:
    using Error::Error;
};

class InvalidEntropyError : public Error {
public:
    using Error::Error;
};

/// Mismatched array extents in sampled-field inputs.
class ShapeError : public Error {
public:
    using Error::Error;
};

class CollisionError : public Error {
public:
    CollisionError(const std::string& what, int vehicle_index)
        : Error(what), vehicle(vehicle_index) {}
    int vehicle;
};

class PositivityError : public Error {
public:
    PositivityError(const std::string& what, int cell_index)
        : Error(what), cell(cell_index) {}
    int cell;
};

class CflError : public Error {
public:
    using Error::Error;
};

class IntegrationError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, int line_number)
        : Error(what + " (line " + std::to_string(line_number) + ")"), line(line_number) {}
    int line;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace tomflow

#endif
