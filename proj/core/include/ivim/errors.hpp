#pragma once

#include <stdexcept>
#include <string>

namespace ivim {

/// Error categories map 1:1 onto CLI exit codes:
/// 0 success, 2 config/usage, 3 data, 4 numerical failure.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ModelIoError : DataError {
    enum class Code { corrupt_file, version_mismatch, architecture_mismatch };
    Code code;
    ModelIoError(Code c, const std::string& msg) : DataError(msg), code(c) {}
};

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

} // namespace ivim
