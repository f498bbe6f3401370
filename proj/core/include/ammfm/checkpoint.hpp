#pragma once

#include <filesystem>

#include "ammfm/config_file.hpp"
#include "ammfm/model.hpp"

namespace ammfm::model {

// A checkpoint is a directory:
//
//   params.txt          key = value manifest: model config, parameter audit,
//                       and one "tensor.<name> = <file> <shape>" line per
//                       parameter
//   tensors/<name>.bin  one serialized tensor per parameter

KeyValues config_to_key_values(const ModelConfig& config);
ModelConfig config_from_key_values(const KeyValues& kv);

void save_checkpoint(const std::filesystem::path& dir, const Model& model);
/// Rebuilds the model from the manifest and loads every tensor. Throws
/// IngestionError naming the file on a missing or malformed entry.
Model load_checkpoint(const std::filesystem::path& dir);

/// Reads the manifest only.
ModelConfig read_checkpoint_config(const std::filesystem::path& dir);
ParamAudit read_checkpoint_audit(const std::filesystem::path& dir);

}  // namespace ammfm::model
