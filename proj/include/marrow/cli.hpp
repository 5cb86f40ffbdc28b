#pragma once

#include <ostream>

namespace marrow {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,     // bad flags, unreadable or invalid input files
    kExitNumerical = 3,  // integrator or steady-state failure
};

/// Entry point of the marrowsim tool. Human-readable progress goes to out,
/// diagnostics to err; results are written under --out.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace marrow
