#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "fct/model/config.hpp"

namespace fct::bench {

enum class Mechanism { sa, csa };

std::string to_string(Mechanism m);
// Throws std::invalid_argument for names other than "sa" and "csa".
Mechanism parse_mechanism(const std::string& text);

// Counting constants. Every report prints them in its header.
struct CostConstants {
  static constexpr double flops_per_mac = 2.0;
  static constexpr double flops_per_butterfly = 10.0;  // one radix-2 complex butterfly
  static constexpr double softmax_per_entry = 5.0;     // max, subtract, exp, sum, divide
  static constexpr double logmax_per_entry = 4.0;      // abs, log, sum, divide
  static constexpr double fusion_per_entry = 3.0;      // alpha a + (1 - alpha) b
  static constexpr double layer_norm_per_entry = 8.0;
  static constexpr double gelu_per_entry = 8.0;
  static constexpr double add_per_entry = 1.0;         // residual adds and pooling
};

// Header lines ("# ...") describing the counting conventions.
std::string cost_header();

// Attention-map term only: n^2 for SA, n^2/2 + 2 n log2 n for CSA.
double map_cost(Mechanism m, std::size_t n);

// Forward FLOPs of one attention layer over n tokens of width c (n a power
// of two for CSA):
//   SA : 3 projections 2nc^2 + logits 2n^2c + softmax + weighted sum 2n^2c
//   CSA: forward/inverse FFT of c rows (5 n log2 n each) + projections on
//        both planes + two L x L maps, their normaliser and fusion + the two
//        map-value products, L = n/2 + 1
double analytic_cost(Mechanism m, std::size_t n, std::size_t c);

enum class FlopConvention {
  full,    // every operation, in FLOPs (the convention of analytic_cost)
  layers,  // multiply-accumulates of learnable layers only (projections, MLP, stem, merges, head)
};

std::string to_string(FlopConvention c);

struct LayerCost {
  std::string name;
  double flops = 0.0;
};

struct ModelCost {
  std::vector<LayerCost> layers;
  double total = 0.0;  // sum of layers, in order
};

// Whole-model forward cost of one image, layer by layer.
ModelCost model_cost(const model::FctConfig& config, FlopConvention convention = FlopConvention::full);

struct Table2Cell {
  std::string arch;
  std::size_t resolution = 0;
  std::size_t params = 0;
  double gflops_full = 0.0;
  double gmacs_layers = 0.0;
  std::optional<double> paper_params_m;
  std::optional<double> paper_gflops;
};

// Published parameter (M) and FLOP (G) figures for the four presets at 224
// and 512 pixels; nullopt elsewhere.
std::optional<std::pair<double, double>> published_cell(const std::string& arch, std::size_t resolution);

// One cell per resolution for a preset config, with the published figure
// alongside when one exists.
std::vector<Table2Cell> table2_report(const model::FctConfig& config, const std::vector<std::size_t>& resolutions);

}  // namespace fct::bench
