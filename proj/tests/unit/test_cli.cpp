#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "ammfm/checkpoint.hpp"
#include "ammfm/cli.hpp"
#include "ammfm/hash.hpp"
#include "ammfm/model.hpp"
#include "oracles.hpp"

namespace ammfm::cli {
namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

// report,metric,column -> value
std::map<std::string, std::string> read_metrics(const std::filesystem::path& csv) {
  std::map<std::string, std::string> m;
  std::istringstream in(testing::read_file(csv));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto last = line.rfind(',');
    m[line.substr(0, last)] = line.substr(last + 1);
  }
  return m;
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir("cli");
    const auto r = run_cli({"gen-data", "--out", (dir_->path() / "data").string(), "--cases", "40",
                            "--size", "8", "--seed", "3"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static std::string data() { return (dir_->path() / "data").string(); }
  static std::string path(const std::string& name) { return (dir_->path() / name).string(); }

  static std::string train(const std::string& out, std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"train", "--data", data(), "--out", path(out)};
    args.insert(args.end(), extra.begin(), extra.end());
    // Defaults unless the caller overrides them.
    for (const auto& [flag, value] : {std::pair{"--epochs", "2"}, std::pair{"--seed", "5"}}) {
      if (std::find(extra.begin(), extra.end(), flag) == extra.end()) {
        args.insert(args.end(), {flag, value});
      }
    }
    const auto r = run_cli(args);
    EXPECT_EQ(r.code, kExitOk) << r.err;
    return path(out);
  }

  static testing::TempDir* dir_;
};

testing::TempDir* CliTest::dir_ = nullptr;

TEST_F(CliTest, GenDataIsByteIdentical) {
  const auto again = path("data2");
  ASSERT_EQ(run_cli({"gen-data", "--out", again, "--cases", "40", "--size", "8", "--seed", "3"}).code,
            kExitOk);
  EXPECT_EQ(hash_directory(data()), hash_directory(again));
  const auto other = path("data3");
  ASSERT_EQ(run_cli({"gen-data", "--out", other, "--cases", "40", "--size", "8", "--seed", "4"}).code,
            kExitOk);
  EXPECT_NE(hash_directory(data()), hash_directory(other));
}

TEST_F(CliTest, GenDataWritesSplitTags) {
  const auto index = testing::read_file(std::filesystem::path(data()) / "index.csv");
  EXPECT_NE(index.find(",train\n"), std::string::npos);
  EXPECT_NE(index.find(",val\n"), std::string::npos);
  EXPECT_NE(index.find(",test\n"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(data()) / "manifest.txt"));
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run_cli({"gen-data", "--cases", "10"}).code, kExitUsage);
  EXPECT_EQ(run_cli({}).code, kExitUsage);
  EXPECT_EQ(run_cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run_cli({"train", "--data", data()}).code, kExitUsage);
  EXPECT_EQ(run_cli({"train", "--data", path("nowhere"), "--out", path("x")}).code, kExitUsage);
  const auto r = run_cli({"eval", "--checkpoint", path("absent"), "--data", data()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("absent"), std::string::npos) << r.err;
  EXPECT_EQ(run_cli({"train", "--data", data(), "--out", path("y"), "--framework", "xff"}).code,
            kExitUsage);
}

TEST_F(CliTest, ZeroDermoscopySignalWarnsButSucceeds) {
  const auto r = run_cli({"gen-data", "--out", path("weak"), "--cases", "20", "--size", "8",
                          "--derm-snr", "0"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.err.find("warning"), std::string::npos) << r.err;
}

TEST_F(CliTest, ZeroEpochsSavesInitialisation) {
  const auto run = train("epochs0", {"--epochs", "0"});
  auto config = model::ModelConfig::make(model::Framework::Aff, blocks::FusionBlock::Aab);
  config.input_height = config.input_width = 8;
  testing::TempDir ref("init");
  model::save_checkpoint(ref / "checkpoint", model::Model::build(config, 5));
  EXPECT_EQ(hash_directory(std::filesystem::path(run) / "checkpoint"),
            hash_directory(ref / "checkpoint"));
}

TEST_F(CliTest, IdenticalRunsGiveIdenticalCheckpoints) {
  const auto a = train("run_a");
  const auto b = train("run_b");
  EXPECT_EQ(hash_directory(std::filesystem::path(a) / "checkpoint"),
            hash_directory(std::filesystem::path(b) / "checkpoint"));
  EXPECT_EQ(testing::read_file(std::filesystem::path(a) / "loss_trace.csv"),
            testing::read_file(std::filesystem::path(b) / "loss_trace.csv"));
  const auto c = train("run_c", {"--seed", "6"});
  EXPECT_NE(hash_directory(std::filesystem::path(a) / "checkpoint"),
            hash_directory(std::filesystem::path(c) / "checkpoint"));
}

TEST_F(CliTest, EvalDermoscopyCornerEqualsDermoscopyBranch) {
  const auto run = train("run_eval");
  const auto out = path("eval_corner");
  const auto r = run_cli({"eval", "--checkpoint", run + "/checkpoint", "--data", data(), "--out",
                          out, "--weights", "1,0,0"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto m = read_metrics(std::filesystem::path(out) / "metrics_test.csv");
  std::size_t compared = 0;
  for (const auto& [key, value] : m) {
    if (key.rfind("P_FI,", 0) != 0) continue;
    EXPECT_EQ(value, m.at("P_D," + key.substr(5))) << key;
    ++compared;
  }
  EXPECT_EQ(compared, 2u + 8u + 96u);
  EXPECT_NE(r.out.find("[fixed]"), std::string::npos);
}

TEST_F(CliTest, EvalSearchBeatsEachBranchOnValidation) {
  const auto run = train("run_search");
  const auto r = run_cli({"eval", "--checkpoint", run + "/checkpoint", "--data", data()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto eval_dir = std::filesystem::path(run) / "eval";
  const auto m = read_metrics(eval_dir / "metrics_val.csv");
  const double fi = std::stod(m.at("P_FI,avg_acc,AVG"));
  for (const char* b : {"P_C", "P_D", "P_FU"}) {
    EXPECT_GE(fi, std::stod(m.at(std::string(b) + ",avg_acc,AVG"))) << b;
  }
  for (const char* f : {"predictions_val.csv", "predictions_test.csv", "metrics_test.csv",
                        "report.txt", "auc_table.csv", "accuracy_table.csv",
                        "melanoma_table.csv", "manifest.txt"}) {
    EXPECT_TRUE(std::filesystem::exists(eval_dir / f)) << f;
  }
  EXPECT_NE(r.out.find("[searched on validation]"), std::string::npos);
  EXPECT_EQ(run_cli({"eval", "--checkpoint", run + "/checkpoint", "--data", data(), "--step",
                     "0"}).code,
            kExitUsage);
}

std::vector<std::vector<std::string>> table_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<std::string> cells;
    std::string cell;
    while (ls >> cell) cells.push_back(cell);
    if (!cells.empty()) rows.push_back(cells);
  }
  return rows;
}

TEST_F(CliTest, ParamsTotalsAreComponentSums) {
  const auto r = run_cli({"params", "--grid"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = table_rows(r.out);
  ASSERT_EQ(rows.size(), 7u);
  EXPECT_EQ(rows[0].back(), "total");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    ASSERT_EQ(rows[i].size(), 7u);
    std::size_t sum = 0;
    for (std::size_t c = 1; c < 6; ++c) sum += std::stoul(rows[i][c]);
    EXPECT_EQ(sum, std::stoul(rows[i][6])) << rows[i][0];
    const auto fw = model::parse_framework(rows[i][0].substr(0, 3));
    const auto block = blocks::parse_fusion_block(rows[i][0].substr(4));
    EXPECT_EQ(std::stoul(rows[i][6]),
              model::audit_config(model::ModelConfig::make(fw, block)).total);
  }
  const auto one = table_rows(run_cli({"params", "--framework", "sff", "--block", "cat"}).out);
  ASSERT_EQ(one.size(), 2u);
  EXPECT_EQ(one[1], rows[1]);
}

TEST_F(CliTest, ParamsFromCheckpoint) {
  const auto run = train("run_params", {"--epochs", "0"});
  const auto r = run_cli({"params", "--checkpoint", run + "/checkpoint"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = table_rows(r.out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1][0], "aff-aab");
  EXPECT_EQ(run_cli({"params", "--checkpoint", path("absent")}).code, kExitUsage);
}

TEST_F(CliTest, ConfigFileFillsUnsetOptionsOnly) {
  const auto cfg = path("gen.cfg");
  std::ofstream(cfg) << "cases = 12\nsize = 8\nseed = 9\n";
  ASSERT_EQ(run_cli({"gen-data", "--config", cfg, "--out", path("cfg_a")}).code, kExitOk);
  ASSERT_EQ(run_cli({"gen-data", "--out", path("cfg_b"), "--cases", "12", "--size", "8", "--seed",
                     "9"}).code,
            kExitOk);
  EXPECT_EQ(hash_directory(path("cfg_a")), hash_directory(path("cfg_b")));
  // The flag wins over the file.
  ASSERT_EQ(run_cli({"gen-data", "--config", cfg, "--out", path("cfg_c"), "--seed", "1"}).code,
            kExitOk);
  EXPECT_NE(hash_directory(path("cfg_a")), hash_directory(path("cfg_c")));
  std::ofstream(path("bad.cfg")) << "colour = blue\n";
  EXPECT_EQ(run_cli({"gen-data", "--config", path("bad.cfg"), "--out", path("cfg_d")}).code,
            kExitUsage);
}

TEST_F(CliTest, AblateSmoke) {
  const auto out = path("ablate");
  const auto r = run_cli({"ablate", "--data", data(), "--out", out, "--seeds", "2", "--grid",
                          "aff:cat,aff:aab", "--epochs", "1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto csv = testing::read_file(std::filesystem::path(out) / "ablation.csv");
  const auto rows = table_rows(csv);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1][0].substr(0, 8), "aff,cat,");
  EXPECT_NE(rows[2][0].find(",2,"), std::string::npos);
  EXPECT_NE(r.out.find("±"), std::string::npos);
}

}  // namespace
}  // namespace ammfm::cli
