#pragma once

namespace slq {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitHardViolation = 2;
inline constexpr int kExitBlowUp = 3;
inline constexpr int kExitVerifyFailed = 4;

// Entry point of the stackelberg_lq tool: offline, simulate, verify,
// special-case and sweep subcommands.
int run_cli(int argc, char** argv);

}  // namespace slq
