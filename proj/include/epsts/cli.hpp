#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "epsts/harness.hpp"

namespace epsts {

// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2 };

// Builds a validated experiment config from settings keyed by field name
// ("objective", "policy", "epsilon", "num_paths", ...; hyphens and
// underscores are interchangeable). Throws ConfigError.
ExperimentConfig config_from_settings(const nlohmann::json& settings);

int cli_main(int argc, char** argv);
// Same, with explicit streams (used by tests).
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace epsts
