#include "ammfm/config_file.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ammfm/errors.hpp"
#include "text.hpp"

namespace ammfm {

KeyValues KeyValues::parse(std::string_view content, std::string_view origin) {
  KeyValues kv;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    const auto line = text::trim(content.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    const auto where = std::string(origin) + ": line " + std::to_string(line_no);
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
    const auto key = std::string(text::trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (kv.contains(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    kv.set(key, std::string(text::trim(line.substr(eq + 1))));
  }
  return kv;
}

KeyValues KeyValues::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void KeyValues::set(std::string key, std::string value) {
  if (auto it = index_.find(key); it != index_.end()) {
    entries_[it->second].second = std::move(value);
    return;
  }
  index_.emplace(key, entries_.size());
  entries_.emplace_back(std::move(key), std::move(value));
}

std::optional<std::string> KeyValues::get(std::string_view key) const {
  const auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second].second;
}

const std::string& KeyValues::require(std::string_view key) const {
  const auto it = index_.find(key);
  if (it == index_.end()) throw ConfigError("missing key '" + std::string(key) + "'");
  return entries_[it->second].second;
}

std::string KeyValues::str() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

void KeyValues::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IngestionError("cannot write " + path.string());
  out << str();
  if (!out) throw IngestionError("failed writing " + path.string());
}

std::size_t parse_size(std::string_view key, std::string_view value) {
  std::size_t v = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
    throw ConfigError("'" + std::string(key) + "': expected a non-negative integer, got '" +
                      std::string(value) + "'");
  }
  return v;
}

double parse_real(std::string_view key, std::string_view value) {
  double v = 0.0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
    throw ConfigError("'" + std::string(key) + "': expected a number, got '" +
                      std::string(value) + "'");
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("'" + std::string(key) + "': expected true or false, got '" +
                    std::string(value) + "'");
}

std::vector<std::size_t> parse_size_list(std::string_view key, std::string_view value) {
  std::vector<std::size_t> out;
  if (text::trim(value).empty()) return out;
  for (const auto& cell : text::split(value, ',')) out.push_back(parse_size(key, cell));
  return out;
}

std::string join_sizes(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

}  // namespace ammfm
