#pragma once

namespace nav3d::cli {

inline constexpr const char* kVersion = "1.0.0";

// Exit codes: 0 success, 1 usage/config error, 2 runtime failure.
int run_cli(int argc, char** argv);

}  // namespace nav3d::cli
