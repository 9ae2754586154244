#pragma once

namespace claimforge::pipeline {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitInternalError = 2;

// Entry point of the claimforge command-line tool.
int run_cli(int argc, char** argv);

}  // namespace claimforge::pipeline
