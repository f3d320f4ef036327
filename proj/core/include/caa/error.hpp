#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace caa {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input with the wrong shape, out-of-range label, or pixels outside [0,1].
class RejectedInput : public Error {
public:
    using Error::Error;
};

// Problem definition that cannot be evaluated (e.g. fewer than two classes).
class InvalidProblem : public Error {
public:
    using Error::Error;
};

class InvalidTarget : public Error {
public:
    using Error::Error;
};

// A non-finite value appeared while evaluating a network.
class NumericError : public Error {
public:
    NumericError(std::size_t layer, std::string const& layer_kind)
        : Error("non-finite value in layer " + std::to_string(layer) + " (" + layer_kind + ")")
        , layer_(layer)
    {
    }
    [[nodiscard]] auto layer() const noexcept -> std::size_t { return layer_; }

private:
    std::size_t layer_;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

// Attack kind not available for the requested norm or not implemented.
class CatalogError : public Error {
public:
    using Error::Error;
};

// MultiTargeted attacks cannot be run in targeted mode.
class ExcludedAttackError : public Error {
public:
    using Error::Error;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

// Parse failure; position is a byte offset, a line number, or a JSON pointer
// depending on the format.
class ParseError : public Error {
public:
    ParseError(std::string const& what, std::string position)
        : Error(what + " at " + position)
        , position_(std::move(position))
    {
    }
    [[nodiscard]] auto position() const -> std::string const& { return position_; }

private:
    std::string position_;
};

class LoadError : public Error {
public:
    LoadError(std::string const& what, std::size_t offset)
        : Error(what + " at byte offset " + std::to_string(offset))
        , offset_(offset)
    {
    }
    [[nodiscard]] auto offset() const noexcept -> std::size_t { return offset_; }

private:
    std::size_t offset_;
};

} // namespace caa
