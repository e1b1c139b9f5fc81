#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pairsource/io.hpp"

namespace pairsource::cli {

using io::json;

struct DataFile {
  std::string name;
  std::string content;
};

struct Output {
  json result;
  std::string table;  // primary CSV body used by --format csv
  std::vector<DataFile> files;
};

/// Commands that consume random numbers; they refuse to run without a seed.
bool is_stochastic(const std::string& command);

/// Runs `command` from a fully resolved config. Every input the command reads is either embedded
/// in `config` or referenced by an absolute path plus content hash.
Output run_command(const std::string& command, const json& config, std::optional<std::uint64_t> seed);

/// {"path": absolute path, "fnv1a64": hex digest} for a CSV input.
json file_ref(const std::string& path);

/// Loads a JSON file and resolves relative file references inside link-budget configs.
json load_config_file(const std::string& path);

/// Envelope written around every result: tool, version, command, seed, config.
json envelope(const std::string& command, const json& config, std::optional<std::uint64_t> seed, const json& result);

/// CSV comment preamble carrying the same provenance as the JSON envelope.
std::string csv_preamble(const std::string& command, const json& config, std::optional<std::uint64_t> seed);

}  // namespace pairsource::cli
