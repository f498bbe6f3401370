#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ammfm::cli {

/// Bad invocation: exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GenDataOptions {
  std::string out;
  std::size_t cases = 200;
  std::size_t size = 32;
  double derm_snr = 0.75;
  double clin_snr = 0.1875;
  double noise = 1.0;
  double train_fraction = 0.6;
  double val_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct TrainOptions {
  std::string data;
  std::string out;
  std::string framework = "aff";
  std::string block = "aab";
  std::string heavy_preset = "toy-heavy";
  std::string light_preset = "toy-light";
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  double learning_rate = 1e-3;
  double swa_window = 0.2;
  std::string reduction = "mean";
  std::vector<std::string> augment;
  bool scaled_attention = false;
  std::uint64_t seed = 0;
  /// Used only when the dataset carries no split tags.
  std::uint64_t split_seed = 0;
};

struct EvalOptions {
  std::string checkpoint;
  std::string data;
  std::string out;
  bool tta = false;
  std::string weights = "search";
  double step = 0.1;
  std::string objective = "avg_acc";
  std::uint64_t split_seed = 0;
};

struct ParamsOptions {
  std::string framework = "aff";
  std::string block = "aab";
  std::string heavy_preset = "toy-heavy";
  std::string light_preset = "toy-light";
  std::string checkpoint;
  bool grid = false;
};

struct AblateOptions {
  std::string data;
  std::string out;
  std::size_t seeds = 3;
  std::string grid = "sff:cat,sff:bab,sff:aab,aff:cat,aff:bab,aff:aab";
  std::string heavy_preset = "toy-heavy";
  std::string light_preset = "toy-light";
  std::size_t epochs = 20;
  std::size_t batch_size = 8;
  double learning_rate = 1e-3;
  double swa_window = 0.2;
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 0;
};

int cmd_gen_data(const GenDataOptions& o, std::ostream& out, std::ostream& err);
int cmd_train(const TrainOptions& o, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err);
int cmd_params(const ParamsOptions& o, std::ostream& out, std::ostream& err);
int cmd_ablate(const AblateOptions& o, std::ostream& out, std::ostream& err);

}  // namespace ammfm::cli
