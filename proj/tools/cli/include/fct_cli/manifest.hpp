#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fct::cli {

// Record of one CLI invocation, written to <out>/run_manifest.json.
struct RunManifest {
  std::string subcommand;
  std::vector<std::string> argv;
  std::map<std::string, std::string> flags;
  std::optional<std::uint64_t> seed;
  std::string version;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> outputs;
  int exit_code = 0;
  std::string error;

  std::string to_json() const;
  void write(const std::filesystem::path& path) const;
};

// UTC timestamp, ISO 8601 with milliseconds.
std::string utc_now();

std::string version_string();

}  // namespace fct::cli
