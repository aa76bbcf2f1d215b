#pragma once

#include "edusim/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace edusim {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

// Subcommands: prepare-bank, run, matrix, report, validate-config.
// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const EnvLookup& env = process_env());

}  // namespace edusim
