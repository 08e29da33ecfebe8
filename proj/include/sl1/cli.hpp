#pragma once

// Command-line front end: sl1 {gen,solve,conditions,trace,grid}.
//
// Each subcommand accepts --config <file.json> plus flags; flags override
// file values, and the fully resolved configuration (defaults included) is
// embedded in every output under "config". A file that itself carries a
// "config" key (any output of this tool) is accepted as a config, so an
// output can be re-run directly. Output paths and --threads are not part of
// the config since they do not affect results.

#include <string>
#include <vector>

#include <json.hpp>

namespace sl1::cli {

enum ExitCode : int {
  kOk = 0,
  kInvalidArgs = 2,
  kIoError = 3,
  kNotConverged = 4,
};

// Runs the tool; never throws. Diagnostics go to stderr.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args);

// Defaults + file + overrides, normalized through the module parsers.
nlohmann::json resolve_config(const std::string& command, const nlohmann::json& file,
                              const nlohmann::json& overrides);

}  // namespace sl1::cli
