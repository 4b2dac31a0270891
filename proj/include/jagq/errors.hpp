#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace jagq {

/// Error categories shared by every evaluator (local, remote, oracle) so that
/// failures can be compared across execution routes.
enum class ErrorCode {
    ShapeMismatch,
    KindMismatch,
    EmptySequence,
    InvalidArray,
    UnboundParameter,
    ForeignParameter,
    AliasCycle,
    DuplicateAlias,
    UndeclaredFunction,
    Redeclaration,
    SchemaError,
    TypeError,
    SyntaxError,
    UnknownFunction,
    UnknownDataset,
    UnsupportedNode,
    NoBackend,
    MissingBinding,
    MissingImplementation,
    WireFormat,
    IoError,
    ParseError,
    Internal,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace jagq
