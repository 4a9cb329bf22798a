#include "fct/bench/cost_model.hpp"

#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fct/model/fct.hpp"
#include "fct/spectral/dft.hpp"

namespace fct::bench {
namespace {

using K = CostConstants;

double log2_exact(std::size_t n) { return static_cast<double>(std::bit_width(n) - 1); }

std::size_t padded(std::size_t n) { return std::max<std::size_t>(2, spectral::next_power_of_two(n)); }

double d(std::size_t v) { return static_cast<double>(v); }

// CSA over `rows` rows of padded length n, split into layer MACs and the rest.
struct CsaCost {
  double projection_macs = 0.0;
  double other_flops = 0.0;
};

CsaCost csa_cost(std::size_t n, std::size_t rows, attention::Normalizer normalizer) {
  const double l = d(spectral::half_length(n));
  const double c = d(rows);
  CsaCost out;
  out.projection_macs = 2.0 * 3.0 * l * c * c;
  const double fft = 2.0 * c * (d(n) / 2.0) * log2_exact(n) * K::flops_per_butterfly;
  const double maps = 2.0 * l * l * c * K::flops_per_mac;
  const double products = 2.0 * l * l * c * K::flops_per_mac;
  double norm = 0.0;
  if (normalizer == attention::Normalizer::logmax) norm = K::logmax_per_entry;
  if (normalizer == attention::Normalizer::softmax) norm = K::softmax_per_entry;
  out.other_flops = fft + maps + products + 2.0 * l * l * (norm + K::fusion_per_entry);
  return out;
}

}  // namespace

std::string to_string(Mechanism m) { return m == Mechanism::sa ? "sa" : "csa"; }

Mechanism parse_mechanism(const std::string& text) {
  if (text == "sa") return Mechanism::sa;
  if (text == "csa") return Mechanism::csa;
  throw std::invalid_argument("unknown mechanism '" + text + "' (expected sa or csa)");
}

std::string to_string(FlopConvention c) { return c == FlopConvention::full ? "full" : "layers"; }

std::string cost_header() {
  std::ostringstream h;
  h << "# FLOP conventions: 1 multiply-accumulate = " << K::flops_per_mac << " FLOPs; radix-2 butterfly = "
    << K::flops_per_butterfly << " FLOPs (5 n log2 n per length-n FFT)\n"
    << "# per-entry costs: softmax " << K::softmax_per_entry << ", logmax " << K::logmax_per_entry << ", fusion "
    << K::fusion_per_entry << ", layer norm " << K::layer_norm_per_entry << ", gelu " << K::gelu_per_entry
    << ", add " << K::add_per_entry << "\n"
    << "# map-level terms: sa n^2, csa n^2/2 + 2 n log2 n\n";
  return h.str();
}

double map_cost(Mechanism m, std::size_t n) {
  if (n == 0) throw std::invalid_argument("map_cost: n must be positive");
  const double nn = d(n);
  if (m == Mechanism::sa) return nn * nn;
  return 0.5 * nn * nn + 2.0 * nn * std::log2(nn);
}

double analytic_cost(Mechanism m, std::size_t n, std::size_t c) {
  if (n == 0 || c == 0) throw std::invalid_argument("analytic_cost: n and c must be positive");
  if (m == Mechanism::sa) {
    const double nn = d(n), cc = d(c);
    return 3.0 * nn * cc * cc * K::flops_per_mac + 2.0 * nn * nn * cc * K::flops_per_mac +
           nn * nn * K::softmax_per_entry;
  }
  if (!spectral::is_power_of_two(n) || n < 2) {
    throw std::invalid_argument("analytic_cost: csa needs a power-of-two length >= 2");
  }
  const CsaCost cost = csa_cost(n, c, attention::Normalizer::logmax);
  return cost.projection_macs * K::flops_per_mac + cost.other_flops;
}

ModelCost model_cost(const model::FctConfig& config, FlopConvention convention) {
  config.validate();
  ModelCost out;
  const bool full = convention == FlopConvention::full;
  auto push = [&](std::string name, double macs, double other) {
    const double f = full ? macs * K::flops_per_mac + other : macs;
    out.layers.push_back({std::move(name), f});
    out.total += f;
  };

  std::size_t side = config.stem_side();
  std::size_t width = config.c1;
  for (std::size_t s = 0; s < model::kStages; ++s)
    if (config.depths[s] > 0) {
      width = config.stage_width(s);
      break;
    }
  const double p2 = d(config.patch * config.patch * config.in_channels);
  push("stem", d(side * side) * p2 * d(width), 0.0);
  if (config.abs_pos) push("ape", 0.0, d(side * side * width) * K::add_per_entry);

  bool first = true;
  for (std::size_t s = 0; s < model::kStages; ++s) {
    if (config.depths[s] == 0) continue;
    const std::size_t w = config.stage_width(s);
    const std::string stage = "stage" + std::to_string(s + 1);
    if (!first) {
      side /= 2;
      push(stage + ".merge", d(side * side) * 4.0 * d(width) * d(w), 0.0);
    }
    first = false;
    width = w;
    const std::size_t t = side * side;
    const double entries = d(t * w);
    const bool spatial = config.block_kinds[s] == model::BlockKind::spatial;
    for (std::size_t b = 0; b < config.depths[s]; ++b) {
      const std::string prefix = model::block_prefix(s, b);
      push(prefix + "ln1", 0.0, entries * K::layer_norm_per_entry);
      const CsaCost csa = spatial ? csa_cost(padded(t), w, config.normalizer) : csa_cost(padded(w), t, config.normalizer);
      push(prefix + "csa", csa.projection_macs, csa.other_flops + entries * K::add_per_entry);
      push(prefix + "ln2", 0.0, entries * K::layer_norm_per_entry);
      const double hidden = d(w * config.mlp_ratio);
      push(prefix + "mlp", 2.0 * d(t) * d(w) * hidden, d(t) * hidden * K::gelu_per_entry + entries * K::add_per_entry);
    }
  }
  push("pool", 0.0, d(side * side * width) * K::add_per_entry);
  push("head", d(width) * d(config.num_classes), 0.0);
  return out;
}

std::optional<std::pair<double, double>> published_cell(const std::string& arch, std::size_t resolution) {
  struct Row {
    const char* arch;
    double p224, f224, p512, f512;
  };
  static constexpr Row rows[] = {
      {"tiny", 27.4, 4.9, 28.2, 25.7},
      {"small", 52.6, 8.9, 54.8, 42.4},
      {"base", 74.0, 15.3, 78.2, 69.8},
      {"large", 179.0, 38.0, 174.5, 169.2},
  };
  for (const Row& r : rows) {
    if (arch != r.arch) continue;
    if (resolution == 224) return std::pair{r.p224, r.f224};
    if (resolution == 512) return std::pair{r.p512, r.f512};
  }
  return std::nullopt;
}

std::vector<Table2Cell> table2_report(const model::FctConfig& config, const std::vector<std::size_t>& resolutions) {
  std::vector<Table2Cell> out;
  for (std::size_t res : resolutions) {
    model::FctConfig c = config;
    c.input_size = res;
    Table2Cell cell;
    cell.arch = config.name;
    cell.resolution = res;
    cell.params = model::count_params(c);
    cell.gflops_full = model_cost(c, FlopConvention::full).total / 1e9;
    cell.gmacs_layers = model_cost(c, FlopConvention::layers).total / 1e9;
    if (auto pub = published_cell(config.name, res)) {
      cell.paper_params_m = pub->first;
      cell.paper_gflops = pub->second;
    }
    out.push_back(cell);
  }
  return out;
}

}  // namespace fct::bench
