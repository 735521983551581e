#include "ivim/error.hpp"

namespace ivim {

const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::InvalidInterval: return "invalid-interval";
    case ErrorKind::TooFewNodes: return "too-few-nodes";
    case ErrorKind::IndexOutOfRange: return "index-out-of-range";
    case ErrorKind::OutOfRange: return "out-of-range";
    case ErrorKind::NonFiniteSample: return "non-finite-sample";
    case ErrorKind::NonFinite: return "non-finite";
    case ErrorKind::Overflow: return "overflow";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::ConfigInvalid: return "config-invalid";
    case ErrorKind::ShapeMismatch: return "shape-mismatch";
    case ErrorKind::IllegalCharacter: return "illegal-character";
    case ErrorKind::UnexpectedToken: return "unexpected-token";
    case ErrorKind::UnbalancedParen: return "unbalanced-paren";
    case ErrorKind::TrailingInput: return "trailing-input";
    case ErrorKind::UnboundVariable: return "unbound-variable";
    case ErrorKind::UnknownVariable: return "unknown-variable";
    case ErrorKind::DomainError: return "domain-error";
    case ErrorKind::GridMismatch: return "grid-mismatch";
    case ErrorKind::UnknownProblem: return "unknown-problem";
    case ErrorKind::InvalidProblem: return "invalid-problem";
    case ErrorKind::Io: return "io";
    }
    return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message, std::optional<std::size_t> position)
    : std::runtime_error(message), kind_(kind), position_(position)
{
}

}  // namespace ivim
