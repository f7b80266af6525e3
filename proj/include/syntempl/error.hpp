#pragma once

#include <stdexcept>
#include <string>

namespace syntempl {

// Bad input data (malformed records, invariant violations). CLI exit code 2.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad invocation (flags, missing files named on the command line). CLI exit code 1.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace syntempl
