#pragma once

#include <stdexcept>
#include <string>

namespace qagnn {

// Error taxonomy mirrors the CLI exit codes: usage -> 1, data -> 2, numeric -> 3.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace qagnn
