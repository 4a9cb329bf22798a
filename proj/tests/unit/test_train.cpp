#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <set>
#include <sstream>

#include "fct/core/error.hpp"
#include "fct/core/rng.hpp"
#include "fct/model/fct.hpp"
#include "fct/train/dataset.hpp"
#include "fct/train/optim.hpp"
#include "fct/train/trainer.hpp"

namespace fct::train {
namespace {

namespace fs = std::filesystem;

// Magnitude of one 2D DFT bin of an image, summed over channels.
double bin_energy(const RealTensor& img, int fx, int fy) {
  const std::size_t n = img.dim(0), ch = img.dim(2);
  double total = 0.0;
  for (std::size_t c = 0; c < ch; ++c) {
    std::complex<double> acc = 0.0;
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x = 0; x < n; ++x) {
        const double ang = -2.0 * std::numbers::pi * (fx * static_cast<double>(x) + fy * static_cast<double>(y)) /
                           static_cast<double>(n);
        acc += img[(y * n + x) * ch + c] * std::complex<double>(std::cos(ang), std::sin(ang));
      }
    total += std::abs(acc);
  }
  return total;
}

// Linear probe on DFT magnitudes with fixed one-hot weights: the class whose
// signature bin carries the most energy.
std::size_t probe_predict(const SyntheticSpectralDataset& data, const RealTensor& img) {
  std::size_t best = 0;
  double best_e = -1.0;
  for (std::size_t k = 0; k < data.spec().num_classes; ++k) {
    auto [fx, fy] = data.class_frequency(k);
    const double e = bin_energy(img, fx, fy);
    if (e > best_e) {
      best_e = e;
      best = k;
    }
  }
  return best;
}

DatasetSpec small_spec(std::size_t k, double noise, std::size_t size = 16) {
  DatasetSpec s;
  s.num_classes = k;
  s.size = size;
  s.noise = noise;
  s.seed = 3;
  return s;
}

TEST(Dataset, SameSeedGivesSameFirstBatch) {
  auto a = make_dataset(small_spec(4, 0.1)).train_batch(0, 8);
  auto b = make_dataset(small_spec(4, 0.1)).train_batch(0, 8);
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(a[i].image, b[i].image);
    EXPECT_EQ(a[i].label, b[i].label);
  }
}

TEST(Dataset, ImagesAreStandardised) {
  auto data = make_dataset(small_spec(4, 0.3, 32));
  Sample s = data.sample(Split::test, 5);
  EXPECT_EQ(s.image.shape(), (Shape{32, 32, 3}));
  const double n = static_cast<double>(s.image.size());
  EXPECT_NEAR(sum(s.image) / n, 0.0, 1e-12);
  EXPECT_NEAR(sum(mul(s.image, s.image)) / n, 1.0, 1e-12);
}

TEST(Dataset, ClassFrequenciesAreDistinct) {
  auto data = make_dataset(small_spec(6, 0.1, 32));
  std::set<std::pair<int, int>> seen;
  for (std::size_t k = 0; k < 6; ++k) EXPECT_TRUE(seen.insert(data.class_frequency(k)).second);
}

TEST(Dataset, NoiselessTwoClassProbeIsPerfect) {
  auto data = make_dataset(small_spec(2, 0.0));
  for (std::size_t i = 0; i < 200; ++i) {
    Sample s = data.sample(Split::train, i);
    EXPECT_EQ(probe_predict(data, s.image), s.label) << i;
  }
}

TEST(Dataset, NoiseDominatedProbeIsAtChance) {
  const std::size_t k = 4, n = 400;
  auto data = make_dataset(small_spec(k, 100.0));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Sample s = data.sample(Split::test, i);
    hits += probe_predict(data, s.image) == s.label;
  }
  const double p = 1.0 / k, sd = std::sqrt(p * (1 - p) / n);
  EXPECT_NEAR(static_cast<double>(hits) / n, p, 3 * sd);
}

TEST(Dataset, SplitsAreDisjointStreams) {
  auto data = make_dataset(small_spec(4, 0.1));
  EXPECT_NE(data.sample(Split::train, 0).image, data.sample(Split::test, 0).image);
}

TEST(Dataset, InvalidSpecRejected) {
  EXPECT_THROW(make_dataset(small_spec(1, 0.1)), std::invalid_argument);
  EXPECT_THROW(make_dataset(small_spec(4, 0.1, 24)), std::invalid_argument);
  EXPECT_THROW(make_dataset(small_spec(4, 0.1, 8)), std::invalid_argument);
}

TEST(Optim, PolyScheduleEndpoints) {
  EXPECT_EQ(poly_lr(1e-3, 0, 100), 1e-3);
  EXPECT_NEAR(poly_lr(1e-3, 50, 100), 1e-3 * std::pow(0.5, 0.9), 1e-18);
  EXPECT_EQ(poly_lr(1e-3, 100, 100), 0.0);
}

TEST(Optim, FirstAdamWStepMatchesHandComputation) {
  ad::ParamStore p;
  p.add("w", RealTensor::vector({1.0, -2.0}), true);
  p.add("b", RealTensor::vector({0.5}), false);
  p.at("w").grad = RealTensor::vector({0.3, -4.0});
  p.at("b").grad = RealTensor::vector({2.0});
  AdamWOptions o;
  adamw_update(p, o, 0.1, 1);
  // Bias-corrected first step: mhat = g, vhat = g^2.
  auto step = [&](double w, double g, double decay) { return w - 0.1 * (g / (std::fabs(g) + o.eps) + decay * w); };
  EXPECT_NEAR(p.value("w")[0], step(1.0, 0.3, 0.01), 1e-15);
  EXPECT_NEAR(p.value("w")[1], step(-2.0, -4.0, 0.01), 1e-15);
  EXPECT_NEAR(p.value("b")[0], step(0.5, 2.0, 0.0), 1e-15);
}

TEST(Metrics, OverallAccuracy) {
  EXPECT_EQ(overall_accuracy({0, 1, 2, 3}, {0, 1, 2, 3}), 1.0);
  EXPECT_EQ(overall_accuracy({0, 1, 2, 3}, {0, 0, 0, 3}), 0.5);
  EXPECT_THROW(overall_accuracy({0}, {0, 1}), DimensionError);
}

TEST(Metrics, UniformRandomPredictionsScoreChance) {
  const std::size_t k = 4, n = 4000;
  auto data = make_dataset(small_spec(k, 0.1));
  Rng rng(9);
  std::vector<std::size_t> predicted, labels;
  for (std::size_t i = 0; i < n; ++i) {
    predicted.push_back(rng.below(k));
    labels.push_back(data.sample(Split::test, i).label);
  }
  const double p = 1.0 / k;
  EXPECT_NEAR(overall_accuracy(predicted, labels), p, 3 * std::sqrt(p * (1 - p) / n));
}

TEST(Metrics, EvaluateScoresEveryTestSample) {
  model::FctConfig c = model::preset("micro");
  const double oa = evaluate(c, model::init_params(c, 1), make_dataset(small_spec(4, 0.1)), 64, 1);
  EXPECT_GE(oa, 0.0);
  EXPECT_LE(oa, 1.0);
  EXPECT_EQ(std::fmod(oa * 64, 1.0), 0.0);
}

TrainOptions quick(std::size_t steps) {
  TrainOptions o;
  o.steps = steps;
  o.batch = 4;
  o.seed = 1;
  o.threads = 1;
  return o;
}

void expect_same_records(const std::vector<TrainRecord>& a, const std::vector<TrainRecord>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].step, b[i].step);
    EXPECT_EQ(a[i].loss, b[i].loss) << "step " << a[i].step;
    EXPECT_EQ(a[i].grad_norm, b[i].grad_norm);
    EXPECT_EQ(a[i].lr, b[i].lr);
  }
}

TEST(Trainer, ZeroLearningRateKeepsLossConstant) {
  DatasetSpec d = small_spec(4, 0.1);
  d.train_size = 4;
  TrainOptions o = quick(5);
  o.adamw.lr = 0.0;
  TrainResult r = Trainer(model::preset("micro"), d, o).run();
  ASSERT_EQ(r.records.size(), 5u);
  for (const auto& rec : r.records) EXPECT_NEAR(rec.loss, r.records[0].loss, 1e-12);
}

TEST(Trainer, SameSeedGivesIdenticalRecords) {
  TrainResult a = Trainer(model::preset("micro"), small_spec(4, 0.1), quick(6)).run();
  TrainResult b = Trainer(model::preset("micro"), small_spec(4, 0.1), quick(6)).run();
  expect_same_records(a.records, b.records);
}

TEST(Trainer, ThreadCountDoesNotChangeRecords) {
  TrainOptions o1 = quick(4), o3 = quick(4);
  o1.batch = o3.batch = 9;
  o3.threads = 3;
  TrainResult a = Trainer(model::preset("micro"), small_spec(4, 0.1), o1).run();
  TrainResult b = Trainer(model::preset("micro"), small_spec(4, 0.1), o3).run();
  for (std::size_t i = 0; i < a.records.size(); ++i)
    EXPECT_NEAR(a.records[i].loss, b.records[i].loss, 1e-12 * std::fabs(a.records[i].loss));
}

TEST(Trainer, CheckpointResumeMatchesUninterruptedRun) {
  const model::FctConfig c = model::preset("micro");
  TrainResult full = Trainer(c, small_spec(4, 0.1), quick(6)).run();

  Trainer first(c, small_spec(4, 0.1), quick(6));
  for (int i = 0; i < 3; ++i) first.step();
  fs::path dir = fs::temp_directory_path() / "fct_train_resume";
  fs::remove_all(dir);
  first.save(dir);
  TrainOptions rest = quick(0);
  Trainer resumed = Trainer::resume(dir, rest);
  EXPECT_EQ(resumed.completed_steps(), 3u);
  TrainRecord next = resumed.step();
  EXPECT_EQ(next.step, 4u);
  EXPECT_NEAR(next.loss, full.records[3].loss, 1e-12 * std::fabs(full.records[3].loss));
  EXPECT_EQ(next.lr, full.records[3].lr);
  fs::remove_all(dir);
}

TEST(Trainer, NonFiniteValuesFlagAndHaltWithoutUpdate) {
  DatasetSpec d = small_spec(4, 0.1);
  d.input_scale = 1e200;
  model::FctConfig c = model::preset("micro");
  c.normalizer = attention::Normalizer::identity;
  Trainer t(c, d, quick(10));
  const ad::ParamStore before = t.params();
  TrainResult r = t.run();
  ASSERT_FALSE(r.records.empty());
  EXPECT_TRUE(r.nan_halted);
  EXPECT_TRUE(r.records.back().nan_flag);
  EXPECT_LT(r.records.size(), 10u);
  EXPECT_FALSE(r.halt_reason.empty());
  if (r.records.size() == 1)
    for (const auto& [name, entry] : before) EXPECT_EQ(t.params().value(name), entry.value) << name;
}

TEST(Trainer, MismatchedDatasetRejected) {
  DatasetSpec d = small_spec(4, 0.1, 32);
  EXPECT_THROW(Trainer(model::preset("micro"), d, quick(1)), std::invalid_argument);
  d = small_spec(3, 0.1);
  EXPECT_THROW(Trainer(model::preset("micro"), d, quick(1)), std::invalid_argument);
}

TEST(Trainer, RecordsCsvHasHeaderAndStableColumns) {
  TrainResult r = Trainer(model::preset("micro"), small_spec(4, 0.1), quick(2)).run();
  std::ostringstream with_wall, without_wall;
  write_records_csv(with_wall, r.records, true);
  write_records_csv(without_wall, r.records, false);
  EXPECT_EQ(with_wall.str().rfind(kTrainRecordHeader, 0), 0u);
  EXPECT_EQ(without_wall.str().rfind("step,loss,grad_norm,nan_flag,lr\n", 0), 0u);
}

TEST(Trainer, LogmaxArmReducesLossWithoutNan) {
  TrainOptions o = quick(1000);
  o.batch = 32;
  o.threads = 0;
  TrainResult r = Trainer(model::preset("micro"), small_spec(4, 0.1), o).run();
  ASSERT_EQ(r.records.size(), 1000u);
  double head = 0, tail = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    head += r.records[i].loss;
    tail += r.records[r.records.size() - 1 - i].loss;
  }
  EXPECT_LT(tail, head);
  for (const auto& rec : r.records) EXPECT_FALSE(rec.nan_flag) << rec.step;
}

}  // namespace
}  // namespace fct::train
