#pragma once

#include <stdexcept>

namespace bseg {

/// Bad input data: unreadable files, malformed records, degenerate matrices.
/// The CLI maps this to exit code 2.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad usage or configuration: invalid flags, config keys, parameter ranges.
/// The CLI maps this to exit code 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace bseg
