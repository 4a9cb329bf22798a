#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fct/attention/normalizers.hpp"

namespace fct::model {

enum class BlockKind { spatial, channel };

std::string to_string(BlockKind kind);
// Accepts "spatial"/"s" and "channel"/"c".
BlockKind parse_block_kind(const std::string& text);

inline constexpr std::size_t kStages = 4;

// Architecture descriptor. Stage s (0-based) runs depths[s] blocks of kind
// block_kinds[s] at width c1 * 2^s on a grid of side input_size / patch / 2^s.
// A stage with depth 0 is skipped together with its incoming transition.
struct FctConfig {
  std::string name = "custom";
  std::size_t c1 = 96;
  std::vector<std::size_t> depths{3, 3, 6, 3};
  std::vector<BlockKind> block_kinds{BlockKind::spatial, BlockKind::spatial, BlockKind::channel,
                                     BlockKind::channel};
  std::size_t mlp_ratio = 4;
  std::size_t num_classes = 1000;
  std::size_t input_size = 224;
  std::size_t in_channels = 3;
  std::size_t patch = 4;
  // Learnable absolute position embedding added after the stem.
  bool abs_pos = false;
  // Learnable scale position embedding (alpha). When off, alpha is fixed at 0.5.
  bool scale_pos = true;
  attention::Normalizer normalizer = attention::Normalizer::logmax;

  // Throws std::invalid_argument describing the first violated constraint.
  void validate() const;

  std::size_t stage_width(std::size_t stage) const { return c1 << stage; }
  // Grid side of a stage, counting only transitions into non-empty stages.
  std::size_t stage_side(std::size_t stage) const;
  std::size_t stage_tokens(std::size_t stage) const { return stage_side(stage) * stage_side(stage); }
  std::size_t stem_side() const { return input_size / patch; }
  // Width entering the head: that of the last non-empty stage, or c1.
  std::size_t final_width() const;
  std::size_t total_blocks() const;

  std::string to_json() const;
  static FctConfig from_json(const std::string& text);

  bool operator==(const FctConfig&) const = default;
};

// Named configurations: "tiny", "small", "base", "large" (224 px, 1000
// classes) and two desk-scale variants, "desk" (c1=32, {1,1,2,1}, 32 px,
// 4 classes) and "micro" (c1=8, {1,1,1,1}, 16 px, patch 2, 4 classes).
FctConfig preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace fct::model
