#pragma once

#include <stdexcept>
#include <string>

namespace slts {

// Argument outside the mathematical domain of an operation (h > n, gamma <= 0, ...).
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Malformed input data: dimension mismatch, non-finite entries, unparsable files.
class input_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A computation produced a non-finite value.
class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace slts
