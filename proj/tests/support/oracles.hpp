#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ammfm/model.hpp"
#include "ammfm/predictions.hpp"
#include "ammfm/rng.hpp"
#include "ammfm/schema.hpp"
#include "ammfm/tensor.hpp"

namespace ammfm::testing {

/// Standard-normal entries drawn from `rng`.
Tensor random_tensor(const Shape& shape, Rng& rng, bool requires_grad = false);
Tensor random_uniform(const Shape& shape, Rng& rng, double lo, double hi);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::string worst;  // "<input index>[<element>]"
};

/// Relative error with a floor on the denominator so that near-zero
/// gradients are compared absolutely: |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor = 1e-2);

/// Compares the backward pass of `loss` against central differences with
/// step `eps` for every element of every tensor in `inputs`. The inputs must
/// be requires_grad leaves; `loss` rebuilds the graph from them each call.
GradCheckResult gradcheck(const std::function<Tensor()>& loss, std::vector<Tensor> inputs,
                          double eps = 1e-6);

/// Random per-task probability vectors for all three branches.
PredictionSet random_predictions(Rng& rng, const data::TaskSchema& schema = data::TaskSchema::spc(),
                                 bool coarse = false);
data::LabelVector random_labels(Rng& rng, const data::TaskSchema& schema = data::TaskSchema::spc());

/// Brute-force weight search over the lattice {i/n} of the 2-simplex with
/// its own argmax and pooled accuracy; first maximiser in lexicographic
/// order wins.
struct NaiveSearchResult {
  double dermoscopy = 0.0;
  double clinical = 0.0;
  double fusion = 0.0;
  double accuracy = 0.0;
  std::size_t candidates = 0;
};
NaiveSearchResult naive_weight_search(const std::vector<PredictionSet>& predictions,
                                      const std::vector<data::LabelVector>& labels, std::size_t n);

/// Two-stage model on 8x8 input, widths at most 4, one asymmetric block with
/// random (non-zero) value projections and an alignment projection.
model::ModelConfig tiny_model_config();

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
  [[nodiscard]] std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);

}  // namespace ammfm::testing
