#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace midicls {

inline constexpr const char* kToolVersion = "1.0.0";

// Exit codes returned by run_cli.
enum ExitCode : int {
    exit_ok = 0,
    exit_internal = 1,
    exit_usage = 2,
    exit_io = 3,
    exit_parse = 4,
    exit_data = 5,
    exit_shape = 6,
    exit_replay_mismatch = 7,
};

// args[0] is the subcommand (no program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Manifest written next to a command's primary output.
std::string manifest_path(const std::string& primary_output);

} // namespace midicls
