#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dyadlss {

/// Base error. Carries the name of the module that raised it so the CLI can
/// report provenance ("corpus: line 4: missing field 'text'").
class Error : public std::runtime_error {
public:
    Error(std::string module, const std::string& message)
        : std::runtime_error(module + ": " + message), module_(std::move(module)) {}

    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

/// Malformed input at a known line of a text file (1-based).
class ParseError : public Error {
public:
    ParseError(std::string module, std::size_t line, const std::string& message)
        : Error(std::move(module), "line " + std::to_string(line) + ": " + message), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Input that parses but violates a contract (missing keys, degenerate data).
class DataError : public Error {
public:
    using Error::Error;
};

/// Numerical failure: singular systems, non-convergence, zero norms.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace dyadlss
