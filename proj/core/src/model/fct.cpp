#include "fct/model/fct.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fct/core/rng.hpp"
#include "fct/spectral/dft.hpp"

namespace fct::model {
namespace {

// Padded length of an attended axis; the FFT needs a power of two >= 2.
std::size_t padded(std::size_t n) { return std::max<std::size_t>(2, spectral::next_power_of_two(n)); }

// FNV-1a, so that each parameter's initial stream depends only on its name.
std::uint64_t name_key(const std::string& name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : name) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void append_block_specs(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t width,
                        std::size_t tokens, BlockKind kind, std::size_t mlp_ratio, bool scale_pos) {
  const std::size_t rows = kind == BlockKind::spatial ? width : tokens;
  const std::size_t attended = kind == BlockKind::spatial ? tokens : width;
  const std::size_t hidden = width * mlp_ratio;
  out.push_back({prefix + "ln1.g", {width}, false});
  out.push_back({prefix + "ln1.b", {width}, false});
  out.push_back({prefix + "csa.wq", {rows, rows}, true});
  out.push_back({prefix + "csa.wk", {rows, rows}, true});
  out.push_back({prefix + "csa.wv", {rows, rows}, true});
  if (scale_pos) out.push_back({prefix + "csa.alpha", {spectral::half_length(padded(attended))}, false});
  out.push_back({prefix + "ln2.g", {width}, false});
  out.push_back({prefix + "ln2.b", {width}, false});
  out.push_back({prefix + "mlp.fc1.w", {width, hidden}, true});
  out.push_back({prefix + "mlp.fc1.b", {hidden}, false});
  out.push_back({prefix + "mlp.fc2.w", {hidden, width}, true});
  out.push_back({prefix + "mlp.fc2.b", {width}, false});
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

RealTensor initial_value(const ParamSpec& spec, std::uint64_t seed) {
  if (ends_with(spec.name, ".g")) return RealTensor::filled(spec.shape, 1.0);
  if (ends_with(spec.name, ".alpha")) return RealTensor::filled(spec.shape, 0.5);
  Rng rng = Rng(seed).fork(name_key(spec.name));
  if (spec.name == "ape") return rng.normal_tensor(spec.shape, 0.02);
  if (spec.shape.size() == 2) return rng.normal_tensor(spec.shape, 1.0 / std::sqrt(static_cast<double>(spec.shape[0])));
  return RealTensor(spec.shape);
}

std::size_t stem_width(const FctConfig& config) {
  for (std::size_t s = 0; s < kStages; ++s)
    if (config.depths[s] > 0) return config.stage_width(s);
  return config.c1;
}

}  // namespace

std::string block_prefix(std::size_t stage, std::size_t block) {
  return "stage" + std::to_string(stage + 1) + ".block" + std::to_string(block + 1) + ".";
}

std::vector<ParamSpec> param_specs(const FctConfig& config) {
  config.validate();
  std::vector<ParamSpec> out;
  const std::size_t c0 = stem_width(config);
  out.push_back({"stem.w", {config.patch * config.patch * config.in_channels, c0}, true});
  out.push_back({"stem.b", {c0}, false});
  if (config.abs_pos) out.push_back({"ape", {config.stem_side() * config.stem_side(), c0}, false});
  std::size_t width = c0;
  bool first = true;
  for (std::size_t s = 0; s < kStages; ++s) {
    if (config.depths[s] == 0) continue;
    const std::size_t w = config.stage_width(s);
    if (!first) {
      const std::string merge = "stage" + std::to_string(s + 1) + ".merge.";
      out.push_back({merge + "w", {4 * width, w}, true});
      out.push_back({merge + "b", {w}, false});
    }
    first = false;
    width = w;
    for (std::size_t b = 0; b < config.depths[s]; ++b) {
      append_block_specs(out, block_prefix(s, b), w, config.stage_tokens(s), config.block_kinds[s],
                         config.mlp_ratio, config.scale_pos);
    }
  }
  out.push_back({"head.w", {width, config.num_classes}, true});
  out.push_back({"head.b", {config.num_classes}, false});
  return out;
}

std::size_t count_params(const FctConfig& config) {
  std::size_t n = 0;
  for (const auto& spec : param_specs(config)) n += shape_product(spec.shape);
  return n;
}

ad::ParamStore init_params(const FctConfig& config, std::uint64_t seed) {
  ad::ParamStore store;
  for (const auto& spec : param_specs(config)) store.add(spec.name, initial_value(spec, seed), spec.decay);
  return store;
}

void add_block_params(ad::ParamStore& params, const std::string& prefix, std::size_t width, std::size_t tokens,
                      BlockKind kind, std::size_t mlp_ratio, std::uint64_t seed) {
  std::vector<ParamSpec> specs;
  append_block_specs(specs, prefix, width, tokens, kind, mlp_ratio, true);
  for (const auto& spec : specs) params.add(spec.name, initial_value(spec, seed), spec.decay);
}

BlockOptions block_options(const FctConfig& config) {
  BlockOptions o;
  o.normalizer = config.normalizer;
  o.scale_pos = config.scale_pos;
  o.mlp_ratio = config.mlp_ratio;
  return o;
}

ad::Var fct_block_forward(ad::Tape& tape, const ad::ParamStore& params, const std::string& prefix, ad::Var x,
                          BlockKind kind, const BlockOptions& options, BlockTrace* trace) {
  auto param = [&](const char* name) { return tape.parameter(params, prefix + name); };

  ad::Var h = ad::layer_norm(x, param("ln1.g"), param("ln1.b"));
  ad::Var rows = kind == BlockKind::spatial ? ad::transpose(h) : h;
  const std::size_t n = rows.value().cols();
  const std::size_t np = padded(n);
  if (np != n) rows = ad::pad_cols(rows, np);

  ad::Var alpha = options.scale_pos ? param("csa.alpha")
                                    : tape.constant(RealTensor::filled({spectral::half_length(np)}, 0.5));
  attention::CsaOptions csa_options;
  csa_options.normalizer = options.normalizer;
  csa_options.policy = options.policy;
  csa_options.stage = prefix + "csa";
  ad::Var a = attention::csa(rows, param("csa.wq"), param("csa.wk"), param("csa.wv"), alpha, csa_options,
                             trace ? &trace->maps : nullptr);
  if (trace) {
    trace->prefix = prefix;
    trace->alpha = alpha.value();
  }
  if (np != n) a = ad::crop_cols(a, n);
  if (kind == BlockKind::spatial) a = ad::transpose(a);
  ad::Var y1 = ad::add(x, a);

  ad::Var h2 = ad::layer_norm(y1, param("ln2.g"), param("ln2.b"));
  ad::Var m = ad::affine(ad::gelu(ad::affine(h2, param("mlp.fc1.w"), param("mlp.fc1.b"))), param("mlp.fc2.w"),
                         param("mlp.fc2.b"));
  return ad::add(y1, m);
}

RealTensor fct_block_forward(const RealTensor& x, const ad::ParamStore& params, const std::string& prefix,
                             BlockKind kind, const BlockOptions& options) {
  if (x.rank() != 3) throw DimensionError("fct_block_forward: expected H x W x C, got " + shape_to_string(x.shape()));
  ad::Tape tape(false);
  ad::Var tokens = tape.constant(x.reshaped({x.dim(0) * x.dim(1), x.dim(2)}));
  return fct_block_forward(tape, params, prefix, tokens, kind, options).value().reshaped(x.shape());
}

ad::Var patch_embed(ad::Tape& tape, const ad::ParamStore& params, const FctConfig& config, ad::Var image) {
  const RealTensor& img = image.value();
  if (img.rank() != 3 || img.dim(2) != config.in_channels) {
    throw DimensionError("patch_embed: expected H x W x " + std::to_string(config.in_channels) + ", got " +
                         shape_to_string(img.shape()));
  }
  const std::size_t h = img.dim(0), w = img.dim(1);
  if (h % config.patch != 0 || w % config.patch != 0) {
    throw SizeError("patch_embed: " + std::to_string(h) + "x" + std::to_string(w) + " image is not divisible by patch " +
                    std::to_string(config.patch));
  }
  ad::Var tokens = ad::reshape(image, {h * w, config.in_channels});
  ad::Var patches = ad::patchify(tokens, h, w, config.patch);
  return ad::affine(patches, tape.parameter(params, "stem.w"), tape.parameter(params, "stem.b"));
}

RealTensor patch_embed(const RealTensor& image, const ad::ParamStore& params, const FctConfig& config) {
  ad::Tape tape(false);
  RealTensor out = patch_embed(tape, params, config, tape.constant(image)).value();
  return out.reshaped({image.dim(0) / config.patch, image.dim(1) / config.patch, out.cols()});
}

ad::Var stage_transition(ad::Tape& tape, const ad::ParamStore& params, const std::string& prefix, ad::Var x,
                         std::size_t h, std::size_t w) {
  if (h % 2 != 0 || w % 2 != 0) {
    throw SizeError("stage_transition: " + std::to_string(h) + "x" + std::to_string(w) + " grid has odd side");
  }
  ad::Var merged = ad::patchify(x, h, w, 2);
  return ad::affine(merged, tape.parameter(params, prefix + "w"), tape.parameter(params, prefix + "b"));
}

RealTensor stage_transition(const RealTensor& x, const ad::ParamStore& params, const std::string& prefix) {
  if (x.rank() != 3) throw DimensionError("stage_transition: expected H x W x C, got " + shape_to_string(x.shape()));
  const std::size_t h = x.dim(0), w = x.dim(1);
  ad::Tape tape(false);
  ad::Var tokens = tape.constant(x.reshaped({h * w, x.dim(2)}));
  RealTensor out = stage_transition(tape, params, prefix, tokens, h, w).value();
  return out.reshaped({h / 2, w / 2, out.cols()});
}

ad::Var forward_logits(ad::Tape& tape, const ad::ParamStore& params, const FctConfig& config, ad::Var image,
                       std::vector<BlockTrace>* traces) {
  const Shape expected{config.input_size, config.input_size, config.in_channels};
  if (image.shape() != expected) {
    throw DimensionError("forward_logits: image " + shape_to_string(image.shape()) + " does not match config " +
                         shape_to_string(expected));
  }
  ad::Var x = patch_embed(tape, params, config, image);
  if (config.abs_pos) x = ad::add(x, tape.parameter(params, "ape"));

  const BlockOptions options = block_options(config);
  std::size_t side = config.stem_side();
  bool first = true;
  for (std::size_t s = 0; s < kStages; ++s) {
    if (config.depths[s] == 0) continue;
    if (!first) {
      x = stage_transition(tape, params, "stage" + std::to_string(s + 1) + ".merge.", x, side, side);
      side /= 2;
    }
    first = false;
    for (std::size_t b = 0; b < config.depths[s]; ++b) {
      BlockTrace* trace = nullptr;
      if (traces) trace = &traces->emplace_back();
      x = fct_block_forward(tape, params, block_prefix(s, b), x, config.block_kinds[s], options, trace);
    }
  }
  ad::Var logits = ad::affine(ad::mean_rows(x), tape.parameter(params, "head.w"), tape.parameter(params, "head.b"));
  ad::check_finite(logits, "head");
  return logits;
}

RealTensor forward_classifier(const RealTensor& image, const FctConfig& config, const ad::ParamStore& params) {
  ad::Tape tape(false);
  const RealTensor& logits = forward_logits(tape, params, config, tape.constant(image)).value();
  return logits.reshaped({logits.size()});
}

}  // namespace fct::model
