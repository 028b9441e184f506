#pragma once

#include <stdexcept>
#include <string>

namespace capde {

// Exit codes for the CLI. Each error class maps to its own code so scripts
// can tell a missing dataset from a corrupt one.
enum class ExitCode : int {
    ok = 0,
    failure = 1,
    usage = 2,
    missing_input = 3,
    version_mismatch = 4,
    shape_mismatch = 5,
    divergence = 6,
    invariant_breach = 7,
    bad_data = 8,
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MissingInputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Container/dataset format problems, each kept distinct.
struct VersionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TruncationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ChecksumError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical blow-up inside an integrator; carries the step index in the message.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A structural guarantee was violated (e.g. a frozen parameter changed).
struct InvariantError : std::logic_error {
    using std::logic_error::logic_error;
};

ExitCode exit_code_for(const std::exception& e);

}  // namespace capde
