#pragma once

#include <stdexcept>
#include <string>

namespace mixboost {

/// User-facing error: bad input data, invalid parameters, malformed files.
/// The CLI maps this to exit code 1.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Broken internal invariant. The CLI maps this to exit code 2.
class InternalError : public std::logic_error {
public:
    explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw Error(msg);
}

} // namespace mixboost
