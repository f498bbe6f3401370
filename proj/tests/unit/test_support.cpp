#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "ammfm/config_file.hpp"
#include "ammfm/errors.hpp"
#include "ammfm/hash.hpp"
#include "ammfm/rng.hpp"
#include "oracles.hpp"

namespace ammfm {
namespace {

TEST(Hash, KnownDigests) {
  EXPECT_EQ(sha1_hex("abc"), "a9993e364706816aba3e25717850c26c9cd0d89d");
  EXPECT_EQ(hash_blob(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  EXPECT_EQ(hash_blob("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST(Hash, DirectoryMatchesGitTree) {
  testing::TempDir dir("hash");
  EXPECT_EQ(hash_directory(dir.path()), "4b825dc642cb6eb9a060e54bf8d69288fbee4904");
  std::ofstream(dir / "a.txt") << "hello\n";
  std::filesystem::create_directory(dir / "sub");
  std::ofstream(dir / "sub" / "b.bin", std::ios::binary) << "x";
  // `git write-tree` of the same layout.
  EXPECT_EQ(hash_directory(dir.path()), "80398e1dc1ba8912939d26a238bcabb5964d2046");
  EXPECT_EQ(hash_path(dir / "a.txt"), hash_blob("hello\n"));
  EXPECT_EQ(hash_file(dir / "a.txt"), hash_blob("hello\n"));
}

TEST(KeyValues, ParseAndQuery) {
  const auto kv = KeyValues::parse("# comment\n\nepochs = 5\n name=sff \nlr = 1e-3\n");
  EXPECT_EQ(kv.entries().size(), 3u);
  EXPECT_EQ(kv.get("name"), "sff");
  EXPECT_EQ(kv.require("epochs"), "5");
  EXPECT_FALSE(kv.get("missing"));
  EXPECT_EQ(parse_size("epochs", kv.require("epochs")), 5u);
  EXPECT_EQ(parse_real("lr", kv.require("lr")), 1e-3);
}

TEST(KeyValues, ErrorsNameTheKey) {
  EXPECT_THROW((void)KeyValues::parse("a = 1\na = 2\n"), ConfigError);
  EXPECT_THROW((void)KeyValues::parse("no separator\n"), ConfigError);
  EXPECT_THROW((void)KeyValues::parse(" = 3\n"), ConfigError);
  try {
    (void)KeyValues::parse("").require("epochs");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("epochs"), std::string::npos);
  }
  try {
    (void)parse_size("batch", "-4");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("batch"), std::string::npos);
  }
  EXPECT_THROW((void)parse_real("lr", "fast"), ConfigError);
  EXPECT_THROW((void)parse_bool("tta", "maybe"), ConfigError);
  EXPECT_THROW((void)KeyValues::read("/nonexistent/config.txt"), ConfigError);
}

TEST(KeyValues, TypedHelpersAndRoundTrip) {
  EXPECT_TRUE(parse_bool("x", "true"));
  EXPECT_FALSE(parse_bool("x", "false"));
  EXPECT_EQ(parse_size_list("s", "1,2,3"), (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_EQ(join_sizes({4, 5}), "4,5");
  testing::TempDir dir("kv");
  KeyValues kv;
  kv.set("b", "2");
  kv.set("a", "1");
  kv.set("b", "3");
  kv.write(dir / "c.txt");
  const auto back = KeyValues::read(dir / "c.txt");
  EXPECT_EQ(back.entries(), kv.entries());
  EXPECT_EQ(back.get("b"), "3");
  EXPECT_EQ(back.entries().front().first, "b");
}

TEST(Rng, DeterministicAndStreamsIndependentOfParentUse) {
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  Rng fresh(42);
  const auto child1 = fresh.split("model");
  (void)fresh.next_u64();
  const auto child2 = fresh.split("model");
  Rng c1 = child1, c2 = child2;
  EXPECT_EQ(c1.next_u64(), c2.next_u64());
  Rng d1 = fresh.split("data"), m1 = fresh.split("model");
  EXPECT_NE(d1.next_u64(), m1.next_u64());
  Rng i0 = fresh.split(std::uint64_t{0}), i1 = fresh.split(std::uint64_t{1});
  EXPECT_NE(i0.next_u64(), i1.next_u64());
}

TEST(Rng, DistributionMoments) {
  Rng rng(7);
  const int n = 200000;
  double su = 0.0, sn = 0.0, sn2 = 0.0;
  std::vector<int> counts(5, 0);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_TRUE(u >= 0.0 && u < 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
    counts[rng.below(5)]++;
  }
  EXPECT_NEAR(su / n, 0.5, 0.005);
  EXPECT_NEAR(sn / n, 0.0, 0.01);
  EXPECT_NEAR(sn2 / n, 1.0, 0.02);
  for (int c : counts) EXPECT_NEAR(c / static_cast<double>(n), 0.2, 0.005);
}

TEST(Rng, ShuffleIsPermutation) {
  Rng rng(3);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  rng.shuffle(std::span<int>(v));
  std::set<int> s(v.begin(), v.end());
  EXPECT_EQ(s.size(), 50u);
  EXPECT_NE(v[0] + v[1] * 50, 0 + 1 * 50);
}

}  // namespace
}  // namespace ammfm
