#include "ammfm/manifest.hpp"

#include <chrono>
#include <ctime>

#include "ammfm/hash.hpp"

namespace ammfm::cli {

void RunManifest::add_input(const std::string& name, const std::filesystem::path& path) {
  inputs.push_back({name, {path.string(), hash_path(path)}});
}

void RunManifest::add_output(const std::string& name, const std::filesystem::path& path) {
  outputs.push_back({name, {path.string(), hash_path(path)}});
}

KeyValues RunManifest::to_key_values() const {
  KeyValues kv;
  kv.set("command", command);
  kv.set("seed", std::to_string(seed));
  for (const auto& [k, v] : config.entries()) kv.set("config." + k, v);
  for (const auto& [name, entry] : inputs) {
    kv.set("input." + name + ".path", entry.first);
    kv.set("input." + name + ".hash", entry.second);
  }
  kv.set("input_hash", input_hash());
  for (const auto& [name, entry] : outputs) {
    kv.set("output." + name + ".path", entry.first);
    kv.set("output." + name + ".hash", entry.second);
  }
  if (started_at) kv.set("started_at", *started_at);
  if (finished_at) kv.set("finished_at", *finished_at);
  return kv;
}

void RunManifest::write(const std::filesystem::path& path) const {
  // Outputs live next to the manifest; record them relative to it so that a
  // run directory can be moved or compared byte for byte.
  RunManifest local = *this;
  const auto base = std::filesystem::absolute(path).parent_path();
  for (auto& [name, entry] : local.outputs) {
    entry.first = std::filesystem::absolute(entry.first).lexically_relative(base).string();
  }
  local.to_key_values().write(path);
}

std::string RunManifest::input_hash() const {
  std::string text = command + "\n" + std::to_string(seed) + "\n" + config.str();
  for (const auto& [name, entry] : inputs) text += name + "=" + entry.second + "\n";
  return sha1_hex(text);
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace ammfm::cli
