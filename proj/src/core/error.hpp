#pragma once

#include <stdexcept>
#include <string>

namespace sdap {

enum class ErrorCode {
    invalid_argument,
    io,
    shape,
    config,
    runtime,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

}  // namespace sdap
