#pragma once

#include <stdexcept>
#include <string>

namespace spreadgrad {

// Bad or inconsistent input: malformed files, missing columns, values out of range.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Linear algebra or sampling broke down (non-PSD covariance, non-finite likelihood).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace spreadgrad
