#include "fct/model/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include "fct/core/error.hpp"
#include "fct/core/files.hpp"
#include "fct/core/tensor_io.hpp"
#include "fct/model/fct.hpp"

namespace fct::model {

namespace fs = std::filesystem;

void save_checkpoint(const fs::path& dir, const FctConfig& config, const ad::ParamStore& params,
                     const CheckpointMeta& meta) {
  fs::create_directories(dir / "params");
  fs::create_directories(dir / "opt");
  nlohmann::ordered_json manifest;
  manifest["format"] = "fct-checkpoint";
  manifest["version"] = 1;
  manifest["config"] = nlohmann::ordered_json::parse(config.to_json());
  manifest["step"] = meta.step;
  manifest["total_steps"] = meta.total_steps;
  manifest["dataset"] = nlohmann::ordered_json::parse(meta.dataset_json);
  nlohmann::ordered_json files = nlohmann::ordered_json::object();
  nlohmann::ordered_json opt = nlohmann::ordered_json::object();
  for (const auto& [name, entry] : params) {
    const std::string rel = "params/" + name + ".fctt";
    write_fctt(dir / rel, entry.value);
    files[name] = rel;
    nlohmann::ordered_json slots = nlohmann::ordered_json::object();
    for (const auto& [slot, tensor] : entry.opt_state) {
      const std::string orel = "opt/" + name + "." + slot + ".fctt";
      write_fctt(dir / orel, tensor);
      slots[slot] = orel;
    }
    if (!slots.empty()) opt[name] = slots;
  }
  manifest["params"] = files;
  manifest["opt_state"] = opt;
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

Checkpoint load_checkpoint(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw FormatError("no checkpoint manifest at " + manifest_path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_text_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint manifest is not valid JSON: ") + e.what());
  }
  if (manifest.value("format", "") != "fct-checkpoint") throw FormatError("not an fct checkpoint: " + dir.string());

  Checkpoint ck;
  try {
    ck.config = FctConfig::from_json(manifest.at("config").dump());
    ck.meta.step = manifest.at("step").get<std::size_t>();
    ck.meta.total_steps = manifest.at("total_steps").get<std::size_t>();
    ck.meta.dataset_json = manifest.at("dataset").dump();
    const auto& files = manifest.at("params");
    const auto& opt = manifest.at("opt_state");
    for (const auto& spec : param_specs(ck.config)) {
      if (!files.contains(spec.name)) throw FormatError("checkpoint lacks parameter '" + spec.name + "'");
      RealTensor value = read_fctt(dir / files.at(spec.name).get<std::string>());
      if (value.shape() != spec.shape) {
        throw FormatError("parameter '" + spec.name + "' has shape " + shape_to_string(value.shape()) +
                          ", config expects " + shape_to_string(spec.shape));
      }
      auto& entry = ck.params.add(spec.name, std::move(value), spec.decay);
      if (opt.contains(spec.name)) {
        for (const auto& [slot, rel] : opt.at(spec.name).items()) {
          entry.opt_state[slot] = read_fctt(dir / rel.get<std::string>());
        }
      }
    }
    if (files.size() != ck.params.size()) throw FormatError("checkpoint holds parameters the config does not define");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed checkpoint manifest: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint config rejected: ") + e.what());
  }
  return ck;
}

}  // namespace fct::model
