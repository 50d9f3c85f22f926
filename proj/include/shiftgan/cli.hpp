#pragma once

namespace shiftgan {

inline constexpr const char* kToolVersion = "0.1.0";

/// Parse argv and dispatch to a subcommand. Returns the process exit code;
/// errors print one structured "error: <kind>: <message>" line on stderr.
int run_cli(int argc, char** argv);

} // namespace shiftgan
