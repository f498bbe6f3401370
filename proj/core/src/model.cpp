#include "ammfm/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "ammfm/errors.hpp"
#include "ammfm/ops.hpp"

namespace ammfm::model {
namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

std::size_t final_width(const BackboneConfig& config) { return config.stage_widths.back(); }

HeadGroup make_heads(std::size_t dim, const data::TaskSchema& schema, Rng rng) {
  HeadGroup group;
  const double stddev = std::sqrt(1.0 / static_cast<double>(dim));
  for (std::size_t t = 0; t < schema.task_count(); ++t) {
    const auto k = schema.category_count(t);
    Rng task_rng = rng.split(schema.task(t).abbrev);
    std::vector<double> w(dim * k);
    for (auto& v : w) v = stddev * task_rng.normal();
    group.weights.push_back(Tensor::parameter(Shape{dim, k}, std::move(w)));
    group.biases.push_back(Tensor::parameter(Shape{k}, std::vector<double>(k, 0.0)));
  }
  return group;
}

void append_conv(std::vector<NamedParameter>& out, const std::string& base, Component component,
                 const blocks::PointwiseConv& conv) {
  out.push_back({base + ".weight", component, conv.weight});
  out.push_back({base + ".bias", component, conv.bias});
}

void append_attention(std::vector<NamedParameter>& out, const std::string& base,
                      const blocks::AttentionParams& p) {
  append_conv(out, base + ".proj_k", Component::Attention, p.proj_k);
  append_conv(out, base + ".proj_q", Component::Attention, p.proj_q);
  append_conv(out, base + ".proj_v", Component::Attention, p.proj_v);
}

void check_image(const Tensor& image, const ModelConfig& config, std::string_view which) {
  const auto& s = image.shape();
  if (s.rank() != 3) {
    throw DimensionError(std::string(which) + " image must be H x W x 3, got " + s.str());
  }
  if (s[0] != config.input_height) {
    throw DimensionError(std::string(which) + " image axis 0 is " + std::to_string(s[0]) +
                         ", expected " + std::to_string(config.input_height));
  }
  if (s[1] != config.input_width) {
    throw DimensionError(std::string(which) + " image axis 1 is " + std::to_string(s[1]) +
                         ", expected " + std::to_string(config.input_width));
  }
  if (s[2] != config.clinical.input_channels) {
    throw DimensionError(std::string(which) + " image axis 2 is " + std::to_string(s[2]) +
                         ", expected " + std::to_string(config.clinical.input_channels));
  }
}

}  // namespace

std::string_view to_string(Framework framework) noexcept {
  return framework == Framework::Sff ? "sff" : "aff";
}

Framework parse_framework(std::string_view text) {
  const auto t = lower(text);
  if (t == "sff") return Framework::Sff;
  if (t == "aff") return Framework::Aff;
  throw ConfigError("unknown framework '" + std::string(text) + "' (expected sff or aff)");
}

std::string_view to_string(Component component) noexcept {
  switch (component) {
    case Component::ClinicalBackbone: return "clinical_backbone";
    case Component::DermoscopyBackbone: return "dermoscopy_backbone";
    case Component::Alignment: return "alignment";
    case Component::Attention: return "attention";
    case Component::Heads: return "heads";
  }
  return "?";
}

ModelConfig ModelConfig::make(Framework framework, blocks::FusionBlock block,
                              std::string_view heavy_preset, std::string_view light_preset) {
  ModelConfig config;
  config.framework = framework;
  config.block = block;
  config.dermoscopy = BackboneConfig::preset(heavy_preset);
  config.clinical =
      framework == Framework::Sff ? config.dermoscopy : BackboneConfig::preset(light_preset);
  if (block != blocks::FusionBlock::Cat) {
    for (std::size_t s = 1; s < config.dermoscopy.stage_count(); ++s) {
      config.attention_stages.push_back(s);
    }
  }
  return config;
}

void ModelConfig::validate() const {
  clinical.validate();
  dermoscopy.validate();
  if (framework == Framework::Sff && clinical != dermoscopy) {
    throw ConfigError("sff requires identical clinical and dermoscopy backbones");
  }
  if (framework == Framework::Aff &&
      (clinical.kind != BackboneKind::Light || dermoscopy.kind != BackboneKind::Heavy)) {
    throw ConfigError("aff requires a light clinical backbone and a heavy dermoscopy backbone");
  }
  if (clinical.stage_count() != dermoscopy.stage_count()) {
    throw ConfigError("clinical and dermoscopy backbones must have the same stage count");
  }
  if (clinical.input_channels != dermoscopy.input_channels) {
    throw ConfigError("clinical and dermoscopy backbones must take the same input channels");
  }
  if (input_height == 0 || input_width == 0) throw ConfigError("input size must be positive");
  const bool cat = block == blocks::FusionBlock::Cat;
  if (cat && !attention_stages.empty()) {
    throw ConfigError("cat block takes no attention stages");
  }
  if (!cat && attention_stages.empty()) {
    throw ConfigError(std::string(blocks::to_string(block)) + " block needs attention stages");
  }
  for (std::size_t i = 0; i < attention_stages.size(); ++i) {
    if (attention_stages[i] >= clinical.stage_count()) {
      throw ConfigError("attention stage " + std::to_string(attention_stages[i]) +
                        " out of range");
    }
    if (i > 0 && attention_stages[i] <= attention_stages[i - 1]) {
      throw ConfigError("attention stages must be strictly increasing");
    }
  }
}

std::vector<Tensor> HeadGroup::logits(const Tensor& embedding) const {
  std::vector<Tensor> out;
  out.reserve(weights.size());
  for (std::size_t t = 0; t < weights.size(); ++t) {
    out.push_back(ops::fully_connected(embedding, weights[t], biases[t]));
  }
  return out;
}

std::size_t HeadGroup::param_count() const {
  std::size_t n = 0;
  for (std::size_t t = 0; t < weights.size(); ++t) n += weights[t].numel() + biases[t].numel();
  return n;
}

Model Model::build(const ModelConfig& config, std::uint64_t seed, const data::TaskSchema& schema) {
  config.validate();
  Model m;
  m.config_ = config;
  m.schema_ = std::make_shared<const data::TaskSchema>(schema);
  const Rng root(seed);
  m.clinical_ = Backbone::build(config.clinical, root.split("clinical"));
  m.dermoscopy_ = Backbone::build(config.dermoscopy, root.split("dermoscopy"));

  const auto clin_shapes = config.clinical.stage_shapes(config.input_height, config.input_width);
  const auto derm_shapes =
      config.dermoscopy.stage_shapes(config.input_height, config.input_width);
  const Rng align_root = root.split("align");
  const Rng attention_root = root.split("attention");
  for (auto s : config.attention_stages) {
    const auto& cs = clin_shapes[s];
    const auto& ds = derm_shapes[s];
    const Rng align_rng = align_root.split(static_cast<std::uint64_t>(s));
    const Rng att_rng = attention_root.split(static_cast<std::uint64_t>(s));
    StageInteraction st;
    st.stage = s;
    st.clinical_to_dermoscopy = Align::between(cs, ds, align_rng.split("c2d"));
    st.enhance_dermoscopy =
        blocks::AttentionParams::init(ds[2], att_rng.split("c2d"), config.zero_init_value);
    st.enhance_dermoscopy.scaled_logits = config.scaled_attention;
    if (config.block == blocks::FusionBlock::Bab) {
      st.dermoscopy_to_clinical = Align::between(ds, cs, align_rng.split("d2c"));
      st.enhance_clinical =
          blocks::AttentionParams::init(cs[2], att_rng.split("d2c"), config.zero_init_value);
      st.enhance_clinical->scaled_logits = config.scaled_attention;
    }
    m.interactions_.push_back(std::move(st));
  }

  const Rng head_root = root.split("heads");
  const auto dc = final_width(config.clinical);
  const auto dd = final_width(config.dermoscopy);
  m.heads_[0] = make_heads(dc, schema, head_root.split("clinical"));
  m.heads_[1] = make_heads(dd, schema, head_root.split("dermoscopy"));
  m.heads_[2] = make_heads(dc + dd, schema, head_root.split("fusion"));
  return m;
}

ForwardResult Model::forward(const Tensor& clinical, const Tensor& dermoscopy) const {
  check_image(clinical, config_, "clinical");
  check_image(dermoscopy, config_, "dermoscopy");
  ForwardResult r;
  Tensor c = clinical;
  Tensor d = dermoscopy;
  auto next = interactions_.begin();
  for (std::size_t s = 0; s < clinical_.stage_count(); ++s) {
    c = clinical_.run_stage(s, c);
    d = dermoscopy_.run_stage(s, d);
    if (next == interactions_.end() || next->stage != s) continue;
    const auto& st = *next++;
    StageState state;
    state.stage = s;
    // Both directions read the unrefined maps of this stage.
    const auto c_on_d = st.clinical_to_dermoscopy.apply(c);
    std::optional<Tensor> refined_c;
    if (st.enhance_clinical) {
      const auto d_on_c = st.dermoscopy_to_clinical->apply(d);
      auto out = blocks::aab_forward(d_on_c, c, *st.enhance_clinical);
      refined_c = out.refined;
      state.dermoscopy_to_clinical = out.state.attention_map;
    }
    auto out = blocks::aab_forward(c_on_d, d, st.enhance_dermoscopy);
    d = out.refined;
    state.clinical_to_dermoscopy = out.state.attention_map;
    if (refined_c) c = *refined_c;
    r.states.push_back(std::move(state));
  }
  r.emb_clinical = ops::global_avg_pool(c);
  r.emb_dermoscopy = ops::global_avg_pool(d);
  r.emb_fusion = blocks::cat_fuse(r.emb_clinical, r.emb_dermoscopy);
  r.logits[0] = heads_[0].logits(r.emb_clinical);
  r.logits[1] = heads_[1].logits(r.emb_dermoscopy);
  r.logits[2] = heads_[2].logits(r.emb_fusion);
  return r;
}

TaskProbabilities task_softmax(const std::vector<Tensor>& logits) {
  TaskProbabilities out;
  out.reserve(logits.size());
  for (const auto& l : logits) {
    const auto p = ops::softmax(l);
    out.emplace_back(p.values().begin(), p.values().end());
  }
  return out;
}

PredictionSet Model::predict(const Tensor& clinical, const Tensor& dermoscopy) const {
  NoGradGuard no_grad;
  const auto r = forward(clinical, dermoscopy);
  PredictionSet p;
  p.clinical = task_softmax(r.logits[0]);
  p.dermoscopy = task_softmax(r.logits[1]);
  p.fusion = task_softmax(r.logits[2]);
  return p;
}

const HeadGroup& Model::heads(Branch branch) const {
  return heads_[static_cast<std::size_t>(branch)];
}

std::vector<NamedParameter> Model::parameters() const {
  std::vector<NamedParameter> out;
  for (auto& [name, t] : clinical_.named_parameters("clinical")) {
    out.push_back({name, Component::ClinicalBackbone, t});
  }
  for (auto& [name, t] : dermoscopy_.named_parameters("dermoscopy")) {
    out.push_back({name, Component::DermoscopyBackbone, t});
  }
  for (const auto& st : interactions_) {
    const auto s = "s" + std::to_string(st.stage);
    if (st.clinical_to_dermoscopy.projection) {
      append_conv(out, "align." + s + ".c2d", Component::Alignment,
                  *st.clinical_to_dermoscopy.projection);
    }
    if (st.dermoscopy_to_clinical && st.dermoscopy_to_clinical->projection) {
      append_conv(out, "align." + s + ".d2c", Component::Alignment,
                  *st.dermoscopy_to_clinical->projection);
    }
    append_attention(out, "attention." + s + ".c2d", st.enhance_dermoscopy);
    if (st.enhance_clinical) append_attention(out, "attention." + s + ".d2c", *st.enhance_clinical);
  }
  for (auto b : kBranches) {
    const auto& h = heads(b);
    for (std::size_t t = 0; t < h.weights.size(); ++t) {
      const auto base = "heads." + std::string(to_string(b)) + "." + schema_->task(t).abbrev;
      out.push_back({base + ".weight", Component::Heads, h.weights[t]});
      out.push_back({base + ".bias", Component::Heads, h.biases[t]});
    }
  }
  return out;
}

ParamAudit Model::count_params() const {
  ParamAudit a;
  a.clinical_backbone = clinical_.param_count();
  a.dermoscopy_backbone = dermoscopy_.param_count();
  for (const auto& st : interactions_) {
    a.alignment += st.clinical_to_dermoscopy.param_count();
    if (st.dermoscopy_to_clinical) a.alignment += st.dermoscopy_to_clinical->param_count();
    a.attention += st.enhance_dermoscopy.param_count();
    if (st.enhance_clinical) a.attention += st.enhance_clinical->param_count();
  }
  for (const auto& h : heads_) a.heads += h.param_count();
  for (const auto& p : parameters()) a.total += p.tensor.numel();
  if (a.total != a.component_sum()) {
    throw ContractError("parameter audit mismatch: enumerated " + std::to_string(a.total) +
                        " vs components " + std::to_string(a.component_sum()));
  }
  return a;
}

Model Model::clone() const {
  Model copy = build(config_, 0, *schema_);
  const auto src = parameters();
  auto dst = copy.parameters();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto v = src[i].tensor.values();
    std::copy(v.begin(), v.end(), dst[i].tensor.mutable_values().begin());
  }
  return copy;
}

ParamAudit audit_config(const ModelConfig& config, const data::TaskSchema& schema) {
  return Model::build(config, 0, schema).count_params();
}

}  // namespace ammfm::model
