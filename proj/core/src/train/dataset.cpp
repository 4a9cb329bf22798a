#include "fct/train/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "fct/core/error.hpp"
#include <numbers>
#include <set>
#include <stdexcept>

#include "fct/core/rng.hpp"

namespace fct::train {

void DatasetSpec::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("DatasetSpec: " + what); };
  if (num_classes < 2) fail("num_classes must be at least 2");
  if (size < 16 || (size & (size - 1)) != 0) fail("size must be a power of two >= 16");
  if (channels == 0) fail("channels must be positive");
  if (!(noise >= 0.0) || !std::isfinite(noise)) fail("noise must be finite and non-negative");
  if (train_size == 0) fail("train_size must be positive");
  if (!std::isfinite(input_scale) || input_scale == 0.0) fail("input_scale must be finite and non-zero");
}

std::string DatasetSpec::to_json() const {
  nlohmann::ordered_json j;
  j["num_classes"] = num_classes;
  j["size"] = size;
  j["channels"] = channels;
  j["noise"] = noise;
  j["seed"] = seed;
  j["train_size"] = train_size;
  j["input_scale"] = input_scale;
  return j.dump();
}

DatasetSpec DatasetSpec::from_json(const std::string& text) {
  DatasetSpec s;
  try {
    const auto j = nlohmann::json::parse(text);
    s.num_classes = j.value("num_classes", s.num_classes);
    s.size = j.value("size", s.size);
    s.channels = j.value("channels", s.channels);
    s.noise = j.value("noise", s.noise);
    s.seed = j.value("seed", s.seed);
    s.train_size = j.value("train_size", s.train_size);
    s.input_scale = j.value("input_scale", s.input_scale);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("DatasetSpec: ") + e.what());
  }
  s.validate();
  return s;
}

SyntheticSpectralDataset::SyntheticSpectralDataset(DatasetSpec spec) : spec_(spec) {
  spec_.validate();
  const std::size_t k = spec_.num_classes;
  const std::size_t half = spec_.size / 2;
  const std::size_t d = std::max<std::size_t>(1, (half - 2) / k);
  std::set<std::pair<int, int>> seen;
  for (std::size_t c = 0; c < k; ++c) {
    const double r = 1.0 + static_cast<double>(c * d);
    const double theta = std::numbers::pi * static_cast<double>(c) / static_cast<double>(k);
    const int fx = static_cast<int>(std::lround(r * std::cos(theta)));
    const int fy = static_cast<int>(std::lround(r * std::sin(theta)));
    if (r >= static_cast<double>(half) || !seen.insert({fx, fy}).second) {
      throw std::invalid_argument("DatasetSpec: " + std::to_string(k) + " classes do not fit distinct frequencies in a " +
                                  std::to_string(spec_.size) + "-pixel image");
    }
    freqs_.emplace_back(fx, fy);
  }
}

Sample SyntheticSpectralDataset::sample(Split split, std::size_t index) const {
  Rng rng = Rng(spec_.seed).fork((static_cast<std::uint64_t>(split) << 62) ^ index);
  Sample s;
  s.label = static_cast<std::size_t>(rng.below(spec_.num_classes));
  const auto [fx, fy] = freqs_[s.label];
  const std::size_t n = spec_.size, ch = spec_.channels;
  s.image = RealTensor({n, n, ch});
  auto px = s.image.data();
  for (std::size_t c = 0; c < ch; ++c) {
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double amp = rng.uniform(0.5, 1.5);
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t x = 0; x < n; ++x) {
        const double arg = 2.0 * std::numbers::pi * (fx * static_cast<double>(x) + fy * static_cast<double>(y)) /
                           static_cast<double>(n);
        px[(y * n + x) * ch + c] = amp * std::cos(arg + phase);
      }
    }
  }
  if (spec_.noise > 0.0)
    for (double& v : px) v += rng.normal(0.0, spec_.noise);

  double mean = 0.0;
  for (double v : px) mean += v;
  mean /= static_cast<double>(px.size());
  double var = 0.0;
  for (double v : px) var += (v - mean) * (v - mean);
  var /= static_cast<double>(px.size());
  const double inv_sd = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
  for (double& v : px) v = (v - mean) * inv_sd * spec_.input_scale;
  return s;
}

std::vector<Sample> SyntheticSpectralDataset::train_batch(std::size_t step, std::size_t batch) const {
  std::vector<Sample> out;
  out.reserve(batch);
  for (std::size_t j = 0; j < batch; ++j) out.push_back(sample(Split::train, (step * batch + j) % spec_.train_size));
  return out;
}

SyntheticSpectralDataset make_dataset(const DatasetSpec& spec) { return SyntheticSpectralDataset(spec); }

}  // namespace fct::train
