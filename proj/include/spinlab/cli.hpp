// Command-line front end: subcommand parsing, dispatch to the library, file
// outputs with run manifests, and manifest-driven replay.
#pragma once

namespace spinlab {

// Parses argv and runs the requested subcommand. Returns the process exit
// code: 0 success, 1 failed numerical check, 2 usage, 3 I/O, 4 capacity,
// 5 divergence. Progress goes to stdout, errors to stderr.
int run_cli(int argc, const char* const* argv);

}  // namespace spinlab
