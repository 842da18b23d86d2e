#pragma once

#include <stdexcept>
#include <string>

namespace gradsample {

// Violated precondition or broken internal invariant.
struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};

// Malformed external input: data files, configs.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw ContractViolation(message);
}

} // namespace gradsample
