#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "fct/autodiff/param_store.hpp"
#include "fct/model/config.hpp"
#include "fct/train/dataset.hpp"
#include "fct/train/optim.hpp"

namespace fct::train {

struct TrainRecord {
  std::size_t step = 0;  // 1-based
  double loss = 0.0;
  double grad_norm = 0.0;
  bool nan_flag = false;
  double lr = 0.0;
  double wall_ms = 0.0;
};

inline constexpr const char* kTrainRecordHeader = "step,loss,grad_norm,nan_flag,lr,wall_ms";
std::string to_csv_row(const TrainRecord& r);

struct TrainOptions {
  std::size_t steps = 1000;
  std::size_t batch = 32;
  AdamWOptions adamw{};
  double schedule_power = 0.9;
  // Global-norm clipping; off unless a positive threshold is given.
  double clip_norm = 0.0;
  std::uint64_t seed = 0;  // parameter initialisation
  // 0 picks FCT_THREADS or the hardware count.
  std::size_t threads = 0;
  std::size_t prefetch = 4;
  // Held-out evaluation every `eval_every` steps (0 disables) on
  // `eval_samples` test images; the run stops early once OA >= target_oa
  // when target_oa > 0.
  std::size_t eval_every = 0;
  std::size_t eval_samples = 256;
  double target_oa = 0.0;
};

struct EvalPoint {
  std::size_t step = 0;
  double oa = 0.0;
};

struct TrainResult {
  std::vector<TrainRecord> records;
  std::vector<EvalPoint> evals;
  bool nan_halted = false;
  bool reached_target = false;
  std::string halt_reason;  // empty when the run finished its steps
};

// Mini-batch trainer. Per-image forward/backward passes are grouped four
// images at a time; group gradients are combined by a pairwise tree, so the
// result is independent of the thread count. A non-finite loss or gradient,
// or a NumericError raised inside the network, marks the record with
// nan_flag and halts the run before the parameters are touched.
class Trainer {
 public:
  Trainer(model::FctConfig config, DatasetSpec data, TrainOptions options);
  // Continues from a checkpoint written by save(); steps counts the total run length.
  static Trainer resume(const std::filesystem::path& checkpoint, TrainOptions options);

  // Runs until options.steps, a NaN, or the OA target. `on_record` sees each
  // record as it is produced.
  TrainResult run(const std::function<void(const TrainRecord&)>& on_record = {});
  // A single optimisation step; returns its record.
  TrainRecord step();

  void save(const std::filesystem::path& dir) const;

  std::size_t completed_steps() const noexcept { return step_; }
  const model::FctConfig& config() const noexcept { return config_; }
  const ad::ParamStore& params() const noexcept { return params_; }
  ad::ParamStore& params() noexcept { return params_; }
  const SyntheticSpectralDataset& dataset() const noexcept { return data_; }

 private:
  TrainRecord step_on(const std::vector<Sample>& batch);

  model::FctConfig config_;
  SyntheticSpectralDataset data_;
  TrainOptions options_;
  ad::ParamStore params_;
  std::size_t step_ = 0;
};

// Overall accuracy: correctly classified samples / samples, over test
// indices [0, count).
double evaluate(const model::FctConfig& config, const ad::ParamStore& params, const SyntheticSpectralDataset& data,
                std::size_t count, std::size_t threads = 0);
double evaluate(const std::filesystem::path& checkpoint, const SyntheticSpectralDataset& data, std::size_t count,
                std::size_t threads = 0);

// Fraction of predictions equal to labels.
double overall_accuracy(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& labels);

void write_records_csv(std::ostream& out, const std::vector<TrainRecord>& records, bool include_wall = true);

}  // namespace fct::train
