#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace nhphase {

// Failure classes and the process exit codes the CLI maps them to:
//   2 parse/validation, 3 degenerate spectrum, 4 biorthogonal/anchor,
//   5 numerical (drift/convergence), 1 anything else.
class Error : public std::runtime_error {
public:
    Error(std::string kind, std::string operation, const std::string& message,
          int exit_code)
        : std::runtime_error(operation + ": " + message),
          kind_(std::move(kind)),
          operation_(std::move(operation)),
          exit_code_(exit_code) {}

    const std::string& kind() const noexcept { return kind_; }
    const std::string& operation() const noexcept { return operation_; }
    int exit_code() const noexcept { return exit_code_; }

private:
    std::string kind_;
    std::string operation_;
    int exit_code_;
};

struct DimensionError : Error {
    DimensionError(std::string op, const std::string& msg)
        : Error("DimensionError", std::move(op), msg, 2) {}
};

struct ParseError : Error {
    ParseError(std::string op, const std::string& msg)
        : Error("ParseError", std::move(op), msg, 2) {}
};

struct GridError : Error {
    GridError(std::string op, const std::string& msg)
        : Error("GridError", std::move(op), msg, 2) {}
};

struct ZeroVectorError : Error {
    ZeroVectorError(std::string op, const std::string& msg)
        : Error("ZeroVectorError", std::move(op), msg, 2) {}
};

// Catch-all for violated operation preconditions that have no dedicated class.
struct ValidationError : Error {
    ValidationError(std::string op, const std::string& msg)
        : Error("ValidationError", std::move(op), msg, 2) {}
};

struct DegenerateSpectrumError : Error {
    DegenerateSpectrumError(std::string op, const std::string& msg)
        : Error("DegenerateSpectrumError", std::move(op), msg, 3) {}
};

struct BiorthogonalError : Error {
    BiorthogonalError(std::string op, const std::string& msg)
        : Error("BiorthogonalError", std::move(op), msg, 4) {}
};

struct AnchorError : Error {
    AnchorError(std::string op, const std::string& msg)
        : Error("AnchorError", std::move(op), msg, 4) {}
};

struct AnchorSearchError : Error {
    AnchorSearchError(std::string op, const std::string& msg)
        : Error("AnchorSearchError", std::move(op), msg, 4) {}
};

struct DegeneratePathError : Error {
    DegeneratePathError(std::string op, const std::string& msg)
        : Error("DegeneratePathError", std::move(op), msg, 4) {}
};

struct NumericalError : Error {
    NumericalError(std::string op, const std::string& msg)
        : Error("NumericalError", std::move(op), msg, 5) {}
};

struct SingularMatrixError : Error {
    SingularMatrixError(std::string op, const std::string& msg)
        : Error("SingularMatrixError", std::move(op), msg, 5) {}
};

struct DriftError : Error {
    DriftError(std::string op, const std::string& msg)
        : Error("DriftError", std::move(op), msg, 5) {}
};

struct AmbiguousMatchError : Error {
    AmbiguousMatchError(std::string op, const std::string& msg)
        : Error("AmbiguousMatchError", std::move(op), msg, 5) {}
};

struct IoError : Error {
    IoError(std::string op, const std::string& msg)
        : Error("IoError", std::move(op), msg, 1) {}
};

}  // namespace nhphase
