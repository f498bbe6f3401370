#include "ammfm/hash.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <iterator>
#include <memory>
#include <vector>

#include "ammfm/errors.hpp"

namespace ammfm {
namespace {

using Digest = std::array<unsigned char, 20>;

Digest sha1(std::string_view a, std::string_view b = {}) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  Digest out{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), a.data(), a.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), b.data(), b.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1 || len != out.size()) {
    throw std::runtime_error("sha1 digest failed");
  }
  return out;
}

std::string hex(const Digest& d) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  for (auto byte : d) {
    s += kDigits[byte >> 4];
    s += kDigits[byte & 15];
  }
  return s;
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Digest blob_digest(std::string_view content) {
  const auto header = "blob " + std::to_string(content.size()) + '\0';
  return sha1(header, content);
}

Digest tree_digest(const std::filesystem::path& dir) {
  struct Entry {
    std::string name;
    bool is_dir;
    Digest id;
  };
  std::vector<Entry> entries;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_directory()) entries.push_back({name, true, tree_digest(e.path())});
    else entries.push_back({name, false, blob_digest(read_all(e.path()))});
  }
  // Git orders directories as if their name ended in '/'.
  auto key = [](const Entry& e) { return e.is_dir ? e.name + "/" : e.name; };
  std::sort(entries.begin(), entries.end(),
            [&](const Entry& a, const Entry& b) { return key(a) < key(b); });
  std::string body;
  for (const auto& e : entries) {
    body += e.is_dir ? "40000 " : "100644 ";
    body += e.name;
    body += '\0';
    body.append(reinterpret_cast<const char*>(e.id.data()), e.id.size());
  }
  const auto header = "tree " + std::to_string(body.size()) + '\0';
  return sha1(header, body);
}

}  // namespace

std::string sha1_hex(std::string_view bytes) { return hex(sha1(bytes)); }

std::string hash_blob(std::string_view content) { return hex(blob_digest(content)); }

std::string hash_file(const std::filesystem::path& path) { return hash_blob(read_all(path)); }

std::string hash_directory(const std::filesystem::path& path) {
  if (!std::filesystem::is_directory(path)) {
    throw IngestionError("not a directory: " + path.string());
  }
  return hex(tree_digest(path));
}

std::string hash_path(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) return hash_directory(path);
  if (!std::filesystem::exists(path)) throw IngestionError("no such file: " + path.string());
  return hash_file(path);
}

}  // namespace ammfm
