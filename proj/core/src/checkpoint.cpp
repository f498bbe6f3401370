#include "ammfm/checkpoint.hpp"

#include "ammfm/errors.hpp"
#include "ammfm/serialize.hpp"
#include "text.hpp"

namespace ammfm::model {
namespace {

constexpr std::string_view kFormat = "ammfm-checkpoint 1";

void put_backbone(KeyValues& kv, const std::string& prefix, const BackboneConfig& b) {
  kv.set(prefix + ".name", b.name);
  kv.set(prefix + ".kind", std::string(to_string(b.kind)));
  kv.set(prefix + ".widths", join_sizes(b.stage_widths));
  kv.set(prefix + ".strides", join_sizes(b.stage_strides));
  kv.set(prefix + ".depths", join_sizes(b.stage_depths));
  kv.set(prefix + ".input_channels", std::to_string(b.input_channels));
}

BackboneConfig get_backbone(const KeyValues& kv, const std::string& prefix) {
  BackboneConfig b;
  b.name = kv.require(prefix + ".name");
  const auto& kind = kv.require(prefix + ".kind");
  if (kind == "light") b.kind = BackboneKind::Light;
  else if (kind == "heavy") b.kind = BackboneKind::Heavy;
  else throw ConfigError("'" + prefix + ".kind': expected light or heavy, got '" + kind + "'");
  b.stage_widths = parse_size_list(prefix + ".widths", kv.require(prefix + ".widths"));
  b.stage_strides = parse_size_list(prefix + ".strides", kv.require(prefix + ".strides"));
  b.stage_depths = parse_size_list(prefix + ".depths", kv.require(prefix + ".depths"));
  b.input_channels =
      parse_size(prefix + ".input_channels", kv.require(prefix + ".input_channels"));
  return b;
}

std::filesystem::path manifest_path(const std::filesystem::path& dir) {
  return dir / "params.txt";
}

KeyValues read_manifest(const std::filesystem::path& dir) {
  const auto path = manifest_path(dir);
  if (!std::filesystem::exists(path)) {
    throw IngestionError("checkpoint manifest not found: " + path.string());
  }
  auto kv = KeyValues::read(path);
  if (kv.get("format") != std::string(kFormat)) {
    throw IngestionError(path.string() + ": not a checkpoint manifest");
  }
  return kv;
}

}  // namespace

KeyValues config_to_key_values(const ModelConfig& c) {
  KeyValues kv;
  kv.set("framework", std::string(to_string(c.framework)));
  kv.set("block", std::string(blocks::to_string(c.block)));
  kv.set("attention_stages", join_sizes(c.attention_stages));
  kv.set("input_height", std::to_string(c.input_height));
  kv.set("input_width", std::to_string(c.input_width));
  kv.set("scaled_attention", c.scaled_attention ? "true" : "false");
  kv.set("zero_init_value", c.zero_init_value ? "true" : "false");
  put_backbone(kv, "clinical", c.clinical);
  put_backbone(kv, "dermoscopy", c.dermoscopy);
  return kv;
}

ModelConfig config_from_key_values(const KeyValues& kv) {
  ModelConfig c;
  c.framework = parse_framework(kv.require("framework"));
  c.block = blocks::parse_fusion_block(kv.require("block"));
  c.attention_stages = parse_size_list("attention_stages", kv.require("attention_stages"));
  c.input_height = parse_size("input_height", kv.require("input_height"));
  c.input_width = parse_size("input_width", kv.require("input_width"));
  c.scaled_attention = parse_bool("scaled_attention", kv.require("scaled_attention"));
  c.zero_init_value = parse_bool("zero_init_value", kv.require("zero_init_value"));
  c.clinical = get_backbone(kv, "clinical");
  c.dermoscopy = get_backbone(kv, "dermoscopy");
  c.validate();
  return c;
}

void save_checkpoint(const std::filesystem::path& dir, const Model& model) {
  std::filesystem::create_directories(dir / "tensors");
  KeyValues kv;
  kv.set("format", std::string(kFormat));
  const auto config_kv = config_to_key_values(model.config());
  for (const auto& [k, v] : config_kv.entries()) kv.set(k, v);
  const auto audit = model.count_params();
  kv.set("audit.clinical_backbone", std::to_string(audit.clinical_backbone));
  kv.set("audit.dermoscopy_backbone", std::to_string(audit.dermoscopy_backbone));
  kv.set("audit.alignment", std::to_string(audit.alignment));
  kv.set("audit.attention", std::to_string(audit.attention));
  kv.set("audit.heads", std::to_string(audit.heads));
  kv.set("audit.total", std::to_string(audit.total));
  for (const auto& p : model.parameters()) {
    const auto file = "tensors/" + p.name + ".bin";
    save_tensor(dir / file, p.tensor);
    kv.set("tensor." + p.name, file + " " + p.tensor.shape().str());
  }
  kv.write(manifest_path(dir));
}

Model load_checkpoint(const std::filesystem::path& dir) {
  const auto kv = read_manifest(dir);
  ModelConfig config;
  try {
    config = config_from_key_values(kv);
  } catch (const ConfigError& e) {
    throw IngestionError(manifest_path(dir).string() + ": " + e.what());
  }
  auto model = Model::build(config, 0);
  for (auto& p : model.parameters()) {
    const auto entry = kv.get("tensor." + p.name);
    if (!entry) {
      throw IngestionError(manifest_path(dir).string() + ": missing tensor '" + p.name + "'");
    }
    const auto cells = text::split(*entry, ' ');
    const auto loaded = load_tensor(dir / cells.at(0));
    if (loaded.shape() != p.tensor.shape()) {
      throw IngestionError((dir / cells.at(0)).string() + ": shape " + loaded.shape().str() +
                           " does not match expected " + p.tensor.shape().str());
    }
    const auto v = loaded.values();
    std::copy(v.begin(), v.end(), p.tensor.mutable_values().begin());
  }
  return model;
}

ModelConfig read_checkpoint_config(const std::filesystem::path& dir) {
  return config_from_key_values(read_manifest(dir));
}

ParamAudit read_checkpoint_audit(const std::filesystem::path& dir) {
  const auto kv = read_manifest(dir);
  ParamAudit a;
  a.clinical_backbone = parse_size("audit.clinical_backbone", kv.require("audit.clinical_backbone"));
  a.dermoscopy_backbone =
      parse_size("audit.dermoscopy_backbone", kv.require("audit.dermoscopy_backbone"));
  a.alignment = parse_size("audit.alignment", kv.require("audit.alignment"));
  a.attention = parse_size("audit.attention", kv.require("audit.attention"));
  a.heads = parse_size("audit.heads", kv.require("audit.heads"));
  a.total = parse_size("audit.total", kv.require("audit.total"));
  if (a.total != a.component_sum()) {
    throw IngestionError(manifest_path(dir).string() + ": audit total disagrees with components");
  }
  return a;
}

}  // namespace ammfm::model
