#pragma once

#include <iosfwd>

namespace mpedge {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

// Parses argv (argv[0] is the program name), runs one subcommand and returns the exit code.
// Primary output goes to `out` unless --out names a directory; diagnostics go to `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mpedge
