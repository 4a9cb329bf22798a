#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fct/attention/self_attention.hpp"
#include "fct/autodiff/ops.hpp"
#include "fct/autodiff/param_store.hpp"
#include "fct/model/config.hpp"

namespace fct::model {

struct ParamSpec {
  std::string name;
  Shape shape;
  bool decay = true;  // weight decay applies to matrices only
};

// Every learnable tensor of the model, in construction order. Names are
// hierarchical: stem.*, ape, stage{s}.merge.*, stage{s}.block{b}.*, head.*.
std::vector<ParamSpec> param_specs(const FctConfig& config);

// Exact learnable-scalar count, computed from the shapes alone.
std::size_t count_params(const FctConfig& config);

// Weights ~ N(0, 1/fan_in), biases 0, LayerNorm gain 1, alpha 0.5,
// absolute position embedding ~ N(0, 0.02^2).
ad::ParamStore init_params(const FctConfig& config, std::uint64_t seed);

std::string block_prefix(std::size_t stage, std::size_t block);

// Block settings shared by every block of a model.
struct BlockOptions {
  attention::Normalizer normalizer = attention::Normalizer::logmax;
  attention::LogmaxPolicy policy{};
  bool scale_pos = true;
  std::size_t mlp_ratio = 4;
};

BlockOptions block_options(const FctConfig& config);

// Attention maps and alpha captured from one block during a forward pass.
struct BlockTrace {
  std::string prefix;
  attention::CsaTrace maps;
  RealTensor alpha;
};

// One FCT block on a token-major x[T x C] for a side x side grid:
//   y1 = x + CSA(LN1(x));  y = y1 + MLP(LN2(y1))
// A spatial block runs CSA over the T tokens (C rows of length T), a
// channel block over the C channels (T rows of length C). The attended axis
// is zero-padded to the next power of two and cropped afterwards.
ad::Var fct_block_forward(ad::Tape& tape, const ad::ParamStore& params, const std::string& prefix, ad::Var x,
                          BlockKind kind, const BlockOptions& options, BlockTrace* trace = nullptr);

// Inference form on an H x W x C feature map.
RealTensor fct_block_forward(const RealTensor& x, const ad::ParamStore& params, const std::string& prefix,
                             BlockKind kind, const BlockOptions& options = {});

// Registers the parameters of one block of width c attending over n
// positions; used for standalone blocks in tests and tools.
void add_block_params(ad::ParamStore& params, const std::string& prefix, std::size_t width, std::size_t tokens,
                      BlockKind kind, std::size_t mlp_ratio, std::uint64_t seed);

// Stem: non-overlapping p x p patches of an H x W x in_channels image,
// flattened and projected to c1 channels. Returns [(H/p)(W/p) x c1].
ad::Var patch_embed(ad::Tape& tape, const ad::ParamStore& params, const FctConfig& config, ad::Var image);
RealTensor patch_embed(const RealTensor& image, const ad::ParamStore& params, const FctConfig& config);

// 2 x 2 neighbourhood concatenation followed by an affine map 4C -> C_out,
// on a token-major h x w grid. Parameters under `prefix`w and `prefix`b.
ad::Var stage_transition(ad::Tape& tape, const ad::ParamStore& params, const std::string& prefix, ad::Var x,
                         std::size_t h, std::size_t w);
RealTensor stage_transition(const RealTensor& x, const ad::ParamStore& params, const std::string& prefix);

// End-to-end pass over an image [H x W x in_channels] -> logits [1 x k].
ad::Var forward_logits(ad::Tape& tape, const ad::ParamStore& params, const FctConfig& config, ad::Var image,
                       std::vector<BlockTrace>* traces = nullptr);

// Logits [k] of one image.
RealTensor forward_classifier(const RealTensor& image, const FctConfig& config, const ad::ParamStore& params);

}  // namespace fct::model
