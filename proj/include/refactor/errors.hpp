#pragma once

#include <stdexcept>
#include <string>

namespace refactor {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Lexing failed (unterminated string, bad indentation, invalid lexeme).
class TokenizeError : public Error {
public:
    TokenizeError(const std::string& what, int line, int column)
        : Error(what + " (line " + std::to_string(line) + ", column " +
                std::to_string(column) + ")"),
          line(line),
          column(column) {}
    int line;
    int column;
};

/// Cyclomatic-complexity analysis failed (source does not parse).
class CCError : public Error {
public:
    using Error::Error;
};

/// No program could be extracted from a model response.
class ExtractError : public Error {
public:
    using Error::Error;
};

/// The replay store has no entry for a request fingerprint.
class ReplayMissError : public Error {
public:
    explicit ReplayMissError(const std::string& fingerprint)
        : Error("replay miss for fingerprint " + fingerprint),
          fingerprint(fingerprint) {}
    std::string fingerprint;
};

/// A live generation failed permanently (4xx or retries exhausted).
class GenerationError : public Error {
public:
    using Error::Error;
};

/// Sandbox or judge infrastructure failed; distinct from any verdict.
class JudgeError : public Error {
public:
    using Error::Error;
};

/// Bad configuration (missing file, unparsable value, invalid catalog).
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace refactor
