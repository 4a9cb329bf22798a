#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fct/core/tensor.hpp"

namespace fct::train {

enum class Split : std::uint8_t { train = 0, test = 1 };

struct DatasetSpec {
  std::size_t num_classes = 4;
  std::size_t size = 32;      // image side S, a power of two >= 16
  std::size_t channels = 3;
  double noise = 0.1;         // Gaussian noise stddev relative to a unit-amplitude pattern
  std::uint64_t seed = 0;
  // Distinct training images; batch indices wrap around this count.
  std::size_t train_size = 1u << 20;
  // Multiplies every pixel after normalisation (x100 drives the spectra to large magnitudes).
  double input_scale = 1.0;

  void validate() const;
  std::string to_json() const;
  static DatasetSpec from_json(const std::string& text);
  bool operator==(const DatasetSpec&) const = default;
};

struct Sample {
  RealTensor image;  // S x S x channels
  std::size_t label = 0;
};

// Oriented plane waves, one integer spatial frequency per class:
//   class c: radius r_c = 1 + c * d, angle theta_c = pi c / k,
//   frequency (round(r_c cos theta_c), round(r_c sin theta_c)),
// with d = max(1, floor((S/2 - 2) / k)). Each sample draws a phase and an
// amplitude per channel, adds N(0, noise^2) per pixel and is standardised to
// zero mean and unit variance before input_scale is applied.
//
// Samples are pure functions of (seed, split, index), so any subset can be
// generated concurrently and in any order.
class SyntheticSpectralDataset {
 public:
  explicit SyntheticSpectralDataset(DatasetSpec spec);

  const DatasetSpec& spec() const noexcept { return spec_; }
  std::pair<int, int> class_frequency(std::size_t label) const { return freqs_.at(label); }

  Sample sample(Split split, std::size_t index) const;
  // Training batch for optimisation step `step`: indices step*B .. step*B+B-1
  // modulo train_size.
  std::vector<Sample> train_batch(std::size_t step, std::size_t batch) const;

 private:
  DatasetSpec spec_;
  std::vector<std::pair<int, int>> freqs_;
};

SyntheticSpectralDataset make_dataset(const DatasetSpec& spec);

}  // namespace fct::train
