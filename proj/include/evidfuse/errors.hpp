#pragma once

#include <stdexcept>
#include <string>

namespace evidfuse {

// Invariant or precondition violation on a value (bad evidence, mismatched
// class counts, degenerate geometry, ...).
struct domain_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed file content (CSV, JSON, PGM).
struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem problems (missing file, failed write).
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values produced during numeric evaluation.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace evidfuse
