#pragma once

#include <stdexcept>
#include <string>

namespace talign {

// Bad user input: unreadable files, invalid parameters, malformed data.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Two operands that must share a shape do not.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// An internal invariant was violated (a bug, not bad input).
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace talign
