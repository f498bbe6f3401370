#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ammfm/config_file.hpp"

namespace ammfm::cli {

/// Record of one command invocation, written as manifest.txt in the run
/// directory.
struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  KeyValues config;
  /// name -> (path, git-style content hash)
  std::vector<std::pair<std::string, std::pair<std::string, std::string>>> inputs;
  std::vector<std::pair<std::string, std::pair<std::string, std::string>>> outputs;
  std::optional<std::string> started_at;
  std::optional<std::string> finished_at;

  void add_input(const std::string& name, const std::filesystem::path& path);
  void add_output(const std::string& name, const std::filesystem::path& path);
  [[nodiscard]] KeyValues to_key_values() const;
  void write(const std::filesystem::path& path) const;
  /// Hash over command, seed, config and input hashes.
  [[nodiscard]] std::string input_hash() const;
};

/// UTC time as 2024-01-31T12:34:56Z.
std::string utc_timestamp();

}  // namespace ammfm::cli
