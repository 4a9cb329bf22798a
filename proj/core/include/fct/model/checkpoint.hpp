#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include "fct/autodiff/param_store.hpp"
#include "fct/model/config.hpp"

namespace fct::model {

struct CheckpointMeta {
  std::size_t step = 0;
  std::size_t total_steps = 0;
  // Serialized JSON describing the data the run trained on ("null" if none).
  std::string dataset_json = "null";
};

struct Checkpoint {
  FctConfig config;
  ad::ParamStore params;
  CheckpointMeta meta;
};

// Directory layout: manifest.json, params/<name>.fctt and
// opt/<name>.<slot>.fctt for optimizer state. Tensors are stored as f64, so
// a save/load round trip is bit-exact. The manifest is written last.
void save_checkpoint(const std::filesystem::path& dir, const FctConfig& config, const ad::ParamStore& params,
                     const CheckpointMeta& meta = {});

// Throws FormatError when the files are missing or do not match the
// parameter layout implied by the stored config.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace fct::model
