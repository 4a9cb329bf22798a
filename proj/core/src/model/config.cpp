#include "fct/model/config.hpp"

#include <nlohmann/json.hpp>
#include <stdexcept>

#include "fct/core/error.hpp"

namespace fct::model {

std::string to_string(BlockKind kind) { return kind == BlockKind::spatial ? "spatial" : "channel"; }

BlockKind parse_block_kind(const std::string& text) {
  if (text == "spatial" || text == "s") return BlockKind::spatial;
  if (text == "channel" || text == "c") return BlockKind::channel;
  throw std::invalid_argument("unknown block kind '" + text + "' (expected spatial or channel)");
}

void FctConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("FctConfig: " + what); };
  if (depths.size() != kStages) fail("depths must list 4 stages");
  if (block_kinds.size() != kStages) fail("block_kinds must list 4 stages");
  if (c1 == 0) fail("c1 must be positive");
  if (mlp_ratio == 0) fail("mlp_ratio must be positive");
  if (num_classes < 2) fail("num_classes must be at least 2");
  if (in_channels == 0) fail("in_channels must be positive");
  if (patch == 0 || input_size == 0 || input_size % patch != 0) {
    fail("input_size " + std::to_string(input_size) + " is not divisible by patch " + std::to_string(patch));
  }
  std::size_t side = stem_side();
  bool first = true;
  for (std::size_t s = 0; s < kStages; ++s) {
    if (depths[s] == 0) continue;
    if (!first) {
      if (side % 2 != 0) fail("stage " + std::to_string(s + 1) + " needs an even grid, got side " + std::to_string(side));
      side /= 2;
    }
    first = false;
  }
}

std::size_t FctConfig::stage_side(std::size_t stage) const {
  std::size_t side = stem_side();
  bool first = true;
  for (std::size_t s = 0; s <= stage && s < kStages; ++s) {
    if (depths[s] == 0) continue;
    if (!first) side /= 2;
    first = false;
  }
  return side;
}

std::size_t FctConfig::final_width() const {
  std::size_t width = c1;
  for (std::size_t s = 0; s < kStages; ++s)
    if (depths[s] > 0) width = stage_width(s);
  return width;
}

std::size_t FctConfig::total_blocks() const {
  std::size_t n = 0;
  for (std::size_t d : depths) n += d;
  return n;
}

std::string FctConfig::to_json() const {
  nlohmann::ordered_json j;
  j["name"] = name;
  j["c1"] = c1;
  j["depths"] = depths;
  std::vector<std::string> kinds;
  for (BlockKind k : block_kinds) kinds.push_back(to_string(k));
  j["block_kinds"] = kinds;
  j["mlp_ratio"] = mlp_ratio;
  j["num_classes"] = num_classes;
  j["input_size"] = input_size;
  j["in_channels"] = in_channels;
  j["patch"] = patch;
  j["abs_pos"] = abs_pos;
  j["scale_pos"] = scale_pos;
  j["normalizer"] = attention::to_string(normalizer);
  return j.dump(2);
}

FctConfig FctConfig::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("FctConfig: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("FctConfig: expected a JSON object");
  // Unspecified fields start from the named preset, or the Tiny layout.
  FctConfig c = j.contains("base") ? preset(j.at("base").get<std::string>()) : FctConfig{};
  try {
    if (j.contains("name")) c.name = j.at("name").get<std::string>();
    if (j.contains("c1")) c.c1 = j.at("c1").get<std::size_t>();
    if (j.contains("depths")) c.depths = j.at("depths").get<std::vector<std::size_t>>();
    if (j.contains("block_kinds")) {
      c.block_kinds.clear();
      for (const auto& k : j.at("block_kinds")) c.block_kinds.push_back(parse_block_kind(k.get<std::string>()));
    }
    if (j.contains("mlp_ratio")) c.mlp_ratio = j.at("mlp_ratio").get<std::size_t>();
    if (j.contains("num_classes")) c.num_classes = j.at("num_classes").get<std::size_t>();
    if (j.contains("input_size")) c.input_size = j.at("input_size").get<std::size_t>();
    if (j.contains("in_channels")) c.in_channels = j.at("in_channels").get<std::size_t>();
    if (j.contains("patch")) c.patch = j.at("patch").get<std::size_t>();
    if (j.contains("abs_pos")) c.abs_pos = j.at("abs_pos").get<bool>();
    if (j.contains("scale_pos")) c.scale_pos = j.at("scale_pos").get<bool>();
    if (j.contains("normalizer")) c.normalizer = attention::parse_normalizer(j.at("normalizer").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("FctConfig: bad field type: ") + e.what());
  }
  c.validate();
  return c;
}

FctConfig preset(const std::string& name) {
  FctConfig c;
  c.name = name;
  if (name == "tiny") {
    c.c1 = 96;
    c.depths = {3, 3, 6, 3};
  } else if (name == "small") {
    c.c1 = 96;
    c.depths = {3, 6, 12, 3};
  } else if (name == "base") {
    c.c1 = 128;
    c.depths = {3, 6, 12, 3};
  } else if (name == "large") {
    c.c1 = 192;
    c.depths = {3, 6, 12, 3};
  } else if (name == "desk") {
    c.c1 = 32;
    c.depths = {1, 1, 2, 1};
    c.input_size = 32;
    c.num_classes = 4;
  } else if (name == "micro") {
    c.c1 = 8;
    c.depths = {1, 1, 1, 1};
    c.input_size = 16;
    c.patch = 2;
    c.num_classes = 4;
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  return c;
}

std::vector<std::string> preset_names() { return {"tiny", "small", "base", "large", "desk", "micro"}; }

}  // namespace fct::model
