#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace pesem::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kNotFound = 2,
  kParseFailure = 3,
  kSchemaFailure = 4,
};

/// Settings shared by the subcommands. A JSON file with these keys may be
/// passed with --config; command-line flags take precedence over it.
struct CliConfig {
  std::optional<std::string> rule_pack;
  std::map<std::string, double, std::less<>> weights;
  double packed_threshold = 0.5;
  std::size_t budget = 512;
  std::optional<std::string> out;
  std::uint64_t seed = 0;
};

/// Throws Error(SchemaError) on unknown keys or wrong types.
CliConfig parse_cli_config(const std::string& json_text);

/// Runs one command line (args excludes the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace pesem::cli
