#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace invlab {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitUsage = 2 };

/// Subcommands: run, verify, rates, info. Never throws; every error maps to an exit code.
int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Sets a dotted-path key (e.g. "problem.J" or "tolerances.slope") in `config`. The path
/// must already exist. The value is parsed as JSON when possible and used as a string
/// otherwise. Throws ValidationError naming the key.
void apply_override(nlohmann::json& config, const std::string& assignment);

}  // namespace invlab
