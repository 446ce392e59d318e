#pragma once

#include <stdexcept>
#include <string>

namespace kolmo {

// Base class for all recoverable failures in the library. The CLI maps
// these to exit code 2 (configuration / usage) unless noted otherwise.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Syntax error while parsing an expression or a config file.
// `offset` is the byte offset into the source text.
struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t off)
        : Error(msg + " at offset " + std::to_string(off)), offset(off) {}
    std::size_t offset;
};

// Runtime failure while evaluating an expression (division by zero,
// non-finite result).
struct EvalError : Error {
    EvalError(const std::string& msg, std::size_t off)
        : Error(msg + " at offset " + std::to_string(off)), offset(off) {}
    std::size_t offset;
};

} // namespace kolmo
