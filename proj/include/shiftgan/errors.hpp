#pragma once

#include <stdexcept>
#include <string>

namespace shiftgan {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// file missing / unreadable / unwritable
struct IoError : Error {
    using Error::Error;
};

// malformed file contents (bad magic, truncation, unsupported encoding)
struct FormatError : Error {
    using Error::Error;
};

// caller violated an operation precondition
struct ContractError : Error {
    using Error::Error;
};

// inconsistent run configuration
struct ConfigError : Error {
    using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ContractError(msg);
}

} // namespace shiftgan
