#pragma once

#include <stdexcept>
#include <string>

namespace snap {

// Error taxonomy. Every throw in the library uses one of these so callers
// (and the CLI exit-code mapping) can distinguish bad input from numerical
// failure.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Matrix/vector dimension mismatch.
struct ShapeError : Error {
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Invalid argument value (negative scale, bad hyperparameter, ...).
struct ParamError : Error {
    explicit ParamError(const std::string& msg) : Error(msg) {}
};

// Empty/degenerate input where data is required.
struct InputError : Error {
    explicit InputError(const std::string& msg) : Error(msg) {}
};

// Non-finite values or numerically undefined results.
struct NumericError : Error {
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

// Malformed file contents; carries row/column context in the message.
struct ParseError : Error {
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

// Two series/panels that must share keys do not line up.
struct AlignmentError : Error {
    explicit AlignmentError(const std::string& msg) : Error(msg) {}
};

// Rank-deficient linear system.
struct SingularError : Error {
    explicit SingularError(const std::string& msg) : Error(msg) {}
};

// Bad run configuration or unwritable paths.
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

} // namespace snap
