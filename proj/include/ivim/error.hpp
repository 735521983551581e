#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace ivim {

enum class ErrorKind {
    InvalidInterval,
    TooFewNodes,
    IndexOutOfRange,
    OutOfRange,
    NonFiniteSample,
    NonFinite,
    Overflow,
    Divergence,
    ConfigInvalid,
    ShapeMismatch,
    IllegalCharacter,
    UnexpectedToken,
    UnbalancedParen,
    TrailingInput,
    UnboundVariable,
    UnknownVariable,
    DomainError,
    GridMismatch,
    UnknownProblem,
    InvalidProblem,
    Io,
};

const char* to_string(ErrorKind kind);

/// Every failure in the library is reported through this type. `position`
/// is a byte offset for expression errors and a 1-based node index for
/// numerical errors; it is empty when there is nothing to point at.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message,
          std::optional<std::size_t> position = std::nullopt);

    ErrorKind kind() const noexcept { return kind_; }
    std::optional<std::size_t> position() const noexcept { return position_; }

private:
    ErrorKind kind_;
    std::optional<std::size_t> position_;
};

}  // namespace ivim
