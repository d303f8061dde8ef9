#pragma once

namespace lonecast::cli {

// Parses argv and runs one pipeline command (synth, extract, align, run,
// explain). Returns the process exit code: 0 success, 1 data or model
// error, 2 usage error.
int run_cli(int argc, const char* const* argv);

} // namespace lonecast::cli
