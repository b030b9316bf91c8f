#pragma once

namespace matnet::cli {

// Command-line entry point (the binary's main is a thin wrapper so
// tests can drive the full surface in-process). Exit codes: 0 success,
// 1 bad input/config (message names the field), 2 usage errors.
int run(int argc, const char* const* argv);

}  // namespace matnet::cli
