#include "capde/errors.hpp"

namespace capde {

ExitCode exit_code_for(const std::exception& e) {
    if (dynamic_cast<const UsageError*>(&e)) return ExitCode::usage;
    if (dynamic_cast<const MissingInputError*>(&e)) return ExitCode::missing_input;
    if (dynamic_cast<const VersionError*>(&e)) return ExitCode::version_mismatch;
    if (dynamic_cast<const ShapeError*>(&e)) return ExitCode::shape_mismatch;
    if (dynamic_cast<const DivergenceError*>(&e)) return ExitCode::divergence;
    if (dynamic_cast<const InvariantError*>(&e)) return ExitCode::invariant_breach;
    if (dynamic_cast<const TruncationError*>(&e)) return ExitCode::bad_data;
    if (dynamic_cast<const ChecksumError*>(&e)) return ExitCode::bad_data;
    return ExitCode::failure;
}

}  // namespace capde
