#pragma once

#include <stdexcept>
#include <string>

namespace stfluct {

enum class ErrorCode {
    InvalidArgument,
    DimensionMismatch,
    UnresolvedReference,
    InternalConsistency,
    OutsideValidity,
    NoBound,
    UndefinedReference,
};

/// Exception type thrown by every module. The code lets callers (and the CLI)
/// distinguish usage errors from scientific conditions without parsing text.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what)
{
    if (!condition) throw Error(code, what);
}

} // namespace stfluct
