#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace projcalc {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression source. `offset` is the byte offset of the problem.
class ParseError : public Error {
public:
    enum class Kind { Syntax, UnknownIdentifier, Arity };

    ParseError(Kind kind, std::size_t offset, const std::string& message)
        : Error(message + " at offset " + std::to_string(offset)), kind_(kind), offset_(offset)
    {}

    Kind kind() const noexcept { return kind_; }
    std::size_t offset() const noexcept { return offset_; }

private:
    Kind kind_;
    std::size_t offset_;
};

/// Evaluation outside the domain of an elementary function.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Degenerate geometric input: singular metric or Jacobian, asymmetric
/// tensor, wrong valence or weight, chart mismatch.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Invalid user input to the model loader or the command line.
class InputError : public Error {
public:
    using Error::Error;
};

} // namespace projcalc
