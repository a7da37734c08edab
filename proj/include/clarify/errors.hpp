#pragma once

#include <stdexcept>
#include <string>

namespace clarify {

// Error categories shared between the C++ core and the C API status codes.
enum class ErrorCode {
    InvalidArgument,
    Parse,          // malformed model output or file contents
    Unscripted,     // scripted backend has no entry for a prompt
    Transport,      // network failure after retries
    Budget,         // per-turn model-call budget exhausted
    Io,
    State,          // schema mismatch, terminal session, undefined statistic
    Usage,          // bad CLI invocation
    Internal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

struct InvalidArgumentError : Error {
    explicit InvalidArgumentError(const std::string& w) : Error(ErrorCode::InvalidArgument, w) {}
};
struct ParseError : Error {
    explicit ParseError(const std::string& w) : Error(ErrorCode::Parse, w) {}
};
struct UnscriptedPromptError : Error {
    explicit UnscriptedPromptError(const std::string& w) : Error(ErrorCode::Unscripted, w) {}
};
struct TransportError : Error {
    explicit TransportError(const std::string& w) : Error(ErrorCode::Transport, w) {}
};
struct BudgetExceededError : Error {
    explicit BudgetExceededError(const std::string& w) : Error(ErrorCode::Budget, w) {}
};
struct IoError : Error {
    explicit IoError(const std::string& w) : Error(ErrorCode::Io, w) {}
};
struct StateError : Error {
    explicit StateError(const std::string& w) : Error(ErrorCode::State, w) {}
};
struct UsageError : Error {
    explicit UsageError(const std::string& w) : Error(ErrorCode::Usage, w) {}
};

} // namespace clarify
