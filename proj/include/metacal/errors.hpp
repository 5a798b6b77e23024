#pragma once

#include <stdexcept>
#include <string>

namespace metacal {

// Malformed or inconsistent input data (bad files, domain violations,
// degenerate selections). CLI maps this to exit code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Numerical failure (non-convergence, undefined statistic). Exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace metacal
