#pragma once

#include <string>
#include <vector>

/// Full command-line front end; returns the process exit code
/// (0 success, 2 usage error, 1 runtime error).
int run_cli(int argc, const char* const* argv);

/// Convenience overload for tests: args without the program name.
int run_cli(const std::vector<std::string>& args);
