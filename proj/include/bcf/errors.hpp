#pragma once

#include <stdexcept>
#include <string>

namespace bcf {

/// Thrown when an enumeration or sampling budget is exceeded; the message
/// states the limit and, where sensible, a feasible parameter suggestion.
struct ResourceError : std::runtime_error {
    explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace bcf
