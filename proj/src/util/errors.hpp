#pragma once

#include <stdexcept>
#include <string>

namespace mepo {

// Error categories surface as distinct status codes at the C boundary.
enum class ErrorKind {
    Io,
    Schema,
    DataIntegrity,
    Config,
    NumericDomain,
    Contract,
};

class Error : public std::runtime_error
{
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what)
        , kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const std::string& what)
{
    if (!cond) {
        throw Error(ErrorKind::Contract, what);
    }
}

} // namespace mepo
