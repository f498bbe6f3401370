#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ammfm/backbone.hpp"
#include "ammfm/blocks.hpp"
#include "ammfm/predictions.hpp"
#include "ammfm/schema.hpp"
#include "ammfm/tensor.hpp"

namespace ammfm::model {

enum class Framework { Sff, Aff };

std::string_view to_string(Framework framework) noexcept;
/// "sff" or "aff", any case.
Framework parse_framework(std::string_view text);

struct ModelConfig {
  Framework framework = Framework::Aff;
  blocks::FusionBlock block = blocks::FusionBlock::Aab;
  /// Stages after which the interaction block runs. Empty iff block is CAT.
  std::vector<std::size_t> attention_stages;
  std::size_t input_height = 32;
  std::size_t input_width = 32;
  BackboneConfig clinical;
  BackboneConfig dermoscopy;
  bool scaled_attention = false;
  /// Start every value projection at zero.
  bool zero_init_value = true;

  /// SFF uses the heavy preset twice; AFF pairs the light preset (clinical)
  /// with the heavy one (dermoscopy). Attention goes after every stage from
  /// the second onward unless the block is CAT.
  static ModelConfig make(Framework framework, blocks::FusionBlock block,
                          std::string_view heavy_preset = "toy-heavy",
                          std::string_view light_preset = "toy-light");

  /// Throws ConfigError when an invariant is broken.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Interaction parameters at one stage.
struct StageInteraction {
  std::size_t stage = 0;
  Align clinical_to_dermoscopy;  // clinical map onto the dermoscopy shape
  std::optional<Align> dermoscopy_to_clinical;
  blocks::AttentionParams enhance_dermoscopy;
  std::optional<blocks::AttentionParams> enhance_clinical;  // BAB only
};

/// One linear classifier per task.
struct HeadGroup {
  std::vector<Tensor> weights;  // D x K_task
  std::vector<Tensor> biases;   // K_task

  [[nodiscard]] std::vector<Tensor> logits(const Tensor& embedding) const;
  [[nodiscard]] std::size_t param_count() const;
};

struct StageState {
  std::size_t stage = 0;
  std::optional<Tensor> clinical_to_dermoscopy;
  std::optional<Tensor> dermoscopy_to_clinical;
};

struct ForwardResult {
  Tensor emb_clinical;
  Tensor emb_dermoscopy;
  Tensor emb_fusion;
  /// logits[branch][task], branch order as kBranches.
  std::array<std::vector<Tensor>, 3> logits;
  std::vector<StageState> states;
};

enum class Component { ClinicalBackbone, DermoscopyBackbone, Alignment, Attention, Heads };

std::string_view to_string(Component component) noexcept;

struct NamedParameter {
  std::string name;
  Component component;
  Tensor tensor;
};

struct ParamAudit {
  std::size_t clinical_backbone = 0;
  std::size_t dermoscopy_backbone = 0;
  std::size_t alignment = 0;
  std::size_t attention = 0;
  std::size_t heads = 0;
  std::size_t total = 0;

  [[nodiscard]] std::size_t component_sum() const noexcept {
    return clinical_backbone + dermoscopy_backbone + alignment + attention + heads;
  }
  friend bool operator==(const ParamAudit&, const ParamAudit&) = default;
};

class Model {
 public:
  /// Every component draws from its own named stream of `seed`.
  static Model build(const ModelConfig& config, std::uint64_t seed,
                     const data::TaskSchema& schema = data::TaskSchema::spc());

  [[nodiscard]] const ModelConfig& config() const noexcept { return config_; }
  [[nodiscard]] const data::TaskSchema& schema() const noexcept { return *schema_; }

  /// Images are H x W x 3 matching the configured input size.
  [[nodiscard]] ForwardResult forward(const Tensor& clinical, const Tensor& dermoscopy) const;
  /// Per-task softmax of every branch, without building a graph.
  [[nodiscard]] PredictionSet predict(const Tensor& clinical, const Tensor& dermoscopy) const;

  /// Stable order; names are unique.
  [[nodiscard]] std::vector<NamedParameter> parameters() const;
  /// Per-component counts. Throws ContractError if the total disagrees with
  /// the component sum.
  [[nodiscard]] ParamAudit count_params() const;

  [[nodiscard]] const Backbone& clinical_backbone() const noexcept { return clinical_; }
  [[nodiscard]] const Backbone& dermoscopy_backbone() const noexcept { return dermoscopy_; }
  [[nodiscard]] const std::vector<StageInteraction>& interactions() const noexcept {
    return interactions_;
  }
  [[nodiscard]] const HeadGroup& heads(Branch branch) const;

  /// Independent copy of every parameter value.
  [[nodiscard]] Model clone() const;

 private:
  ModelConfig config_;
  std::shared_ptr<const data::TaskSchema> schema_;
  Backbone clinical_;
  Backbone dermoscopy_;
  std::vector<StageInteraction> interactions_;
  std::array<HeadGroup, 3> heads_;
};

/// Convert a logit vector per task into probabilities.
TaskProbabilities task_softmax(const std::vector<Tensor>& logits);

/// Audit of a configuration, computed by building it.
ParamAudit audit_config(const ModelConfig& config,
                        const data::TaskSchema& schema = data::TaskSchema::spc());

}  // namespace ammfm::model
