#include "fct/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "fct/autodiff/ops.hpp"
#include "fct/core/error.hpp"
#include "fct/core/parallel.hpp"
#include "fct/model/checkpoint.hpp"
#include "fct/model/fct.hpp"

namespace fct::train {
namespace {

constexpr std::size_t kGroup = 4;

std::size_t resolve_threads(std::size_t requested) {
  return requested > 0 ? requested : configured_threads(hardware_threads());
}

// Bounded single-producer queue of training batches, generated ahead of
// the optimiser on a background thread.
class BatchQueue {
 public:
  BatchQueue(const SyntheticSpectralDataset& data, std::size_t first, std::size_t last, std::size_t batch,
             std::size_t capacity)
      : capacity_(std::max<std::size_t>(1, capacity)) {
    producer_ = std::jthread([this, &data, first, last, batch](std::stop_token stop) {
      for (std::size_t s = first; s < last; ++s) {
        std::vector<Sample> b = data.train_batch(s, batch);
        std::unique_lock lock(mutex_);
        not_full_.wait(lock, [&] { return queue_.size() < capacity_ || stop.stop_requested(); });
        if (stop.stop_requested()) return;
        queue_.push_back(std::move(b));
        not_empty_.notify_one();
      }
    });
  }

  ~BatchQueue() {
    producer_.request_stop();
    {
      std::lock_guard lock(mutex_);
      not_full_.notify_all();
    }
  }

  std::vector<Sample> pop() {
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return !queue_.empty(); });
    std::vector<Sample> b = std::move(queue_.front());
    queue_.pop_front();
    not_full_.notify_one();
    return b;
  }

 private:
  std::size_t capacity_;
  std::mutex mutex_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<std::vector<Sample>> queue_;
  std::jthread producer_;
};

struct GroupResult {
  ad::GradientSet grads;
  double loss = 0.0;
  bool numeric_failure = false;
};

}  // namespace

std::string to_csv_row(const TrainRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%d,%.17g,%.3f", r.step, r.loss, r.grad_norm, r.nan_flag ? 1 : 0,
                r.lr, r.wall_ms);
  return buf;
}

void write_records_csv(std::ostream& out, const std::vector<TrainRecord>& records, bool include_wall) {
  out << (include_wall ? kTrainRecordHeader : "step,loss,grad_norm,nan_flag,lr") << '\n';
  for (const auto& r : records) {
    std::string row = to_csv_row(r);
    if (!include_wall) row.erase(row.rfind(','));
    out << row << '\n';
  }
}

Trainer::Trainer(model::FctConfig config, DatasetSpec data, TrainOptions options)
    : config_(std::move(config)), data_(data), options_(options) {
  config_.validate();
  if (options_.batch == 0) throw std::invalid_argument("Trainer: batch must be positive");
  if (data.size != config_.input_size || data.channels != config_.in_channels ||
      data.num_classes != config_.num_classes) {
    throw std::invalid_argument("Trainer: dataset (" + std::to_string(data.size) + " px, " +
                                std::to_string(data.channels) + " channels, " + std::to_string(data.num_classes) +
                                " classes) does not match the model config (" + std::to_string(config_.input_size) +
                                " px, " + std::to_string(config_.in_channels) + " channels, " +
                                std::to_string(config_.num_classes) + " classes)");
  }
  params_ = model::init_params(config_, options_.seed);
}

Trainer Trainer::resume(const std::filesystem::path& checkpoint, TrainOptions options) {
  model::Checkpoint ck = model::load_checkpoint(checkpoint);
  if (options.steps == 0) options.steps = ck.meta.total_steps;
  Trainer t(ck.config, DatasetSpec::from_json(ck.meta.dataset_json), options);
  t.params_ = std::move(ck.params);
  t.step_ = ck.meta.step;
  return t;
}

void Trainer::save(const std::filesystem::path& dir) const {
  model::CheckpointMeta meta;
  meta.step = step_;
  meta.total_steps = options_.steps;
  meta.dataset_json = data_.spec().to_json();
  model::save_checkpoint(dir, config_, params_, meta);
}

TrainRecord Trainer::step() { return step_on(data_.train_batch(step_, options_.batch)); }

TrainRecord Trainer::step_on(const std::vector<Sample>& batch) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainRecord rec;
  rec.step = step_ + 1;
  rec.lr = poly_lr(options_.adamw.lr, step_, options_.steps, options_.schedule_power);

  const std::size_t groups = (batch.size() + kGroup - 1) / kGroup;
  std::vector<GroupResult> results(groups);
  parallel_for(groups, resolve_threads(options_.threads), [&](std::size_t gi) {
    GroupResult& r = results[gi];
    r.grads = ad::GradientSet::zeros_like(params_);
    try {
      for (std::size_t j = gi * kGroup; j < std::min(batch.size(), (gi + 1) * kGroup); ++j) {
        ad::Tape tape;
        ad::Var logits = model::forward_logits(tape, params_, config_, tape.constant(batch[j].image));
        ad::Var loss = ad::cross_entropy(logits, batch[j].label);
        tape.backward(loss);
        r.loss += loss.value().item();
        r.grads.add_inplace(tape.gradients(params_));
      }
    } catch (const NumericError&) {
      r.numeric_failure = true;
    }
  });

  bool failed = false;
  double loss = 0.0;
  std::vector<ad::GradientSet> parts;
  parts.reserve(groups);
  for (auto& r : results) {
    failed = failed || r.numeric_failure;
    loss += r.loss;
    parts.push_back(std::move(r.grads));
  }
  ad::GradientSet grads = ad::tree_reduce(std::move(parts));
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  grads.scale_inplace(inv_b);
  rec.loss = failed ? std::numeric_limits<double>::quiet_NaN() : loss * inv_b;
  rec.grad_norm = grads.l2_norm();
  rec.nan_flag = failed || !std::isfinite(rec.loss) || !std::isfinite(rec.grad_norm);

  if (!rec.nan_flag) {
    if (options_.clip_norm > 0.0 && rec.grad_norm > options_.clip_norm) {
      grads.scale_inplace(options_.clip_norm / rec.grad_norm);
    }
    ad::store_gradients(params_, grads);
    adamw_update(params_, options_.adamw, rec.lr, step_ + 1);
    ++step_;
  }
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

TrainResult Trainer::run(const std::function<void(const TrainRecord&)>& on_record) {
  TrainResult result;
  if (step_ >= options_.steps) return result;
  BatchQueue queue(data_, step_, options_.steps, options_.batch, options_.prefetch);
  while (step_ < options_.steps) {
    TrainRecord rec = step_on(queue.pop());
    result.records.push_back(rec);
    if (on_record) on_record(rec);
    if (rec.nan_flag) {
      result.nan_halted = true;
      result.halt_reason = "non-finite loss or gradient at step " + std::to_string(rec.step);
      break;
    }
    if (options_.eval_every > 0 && (step_ % options_.eval_every == 0 || step_ == options_.steps)) {
      const double oa = evaluate(config_, params_, data_, options_.eval_samples, options_.threads);
      result.evals.push_back({step_, oa});
      if (options_.target_oa > 0.0 && oa >= options_.target_oa) {
        result.reached_target = true;
        if (step_ < options_.steps) result.halt_reason = "held-out OA target reached at step " + std::to_string(step_);
        break;
      }
    }
  }
  return result;
}

double overall_accuracy(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& labels) {
  if (predicted.size() != labels.size()) throw DimensionError("overall_accuracy: prediction/label count mismatch");
  if (labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predicted[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double evaluate(const model::FctConfig& config, const ad::ParamStore& params, const SyntheticSpectralDataset& data,
                std::size_t count, std::size_t threads) {
  const DatasetSpec& s = data.spec();
  if (s.size != config.input_size || s.channels != config.in_channels || s.num_classes != config.num_classes) {
    throw std::invalid_argument("evaluate: dataset does not match the model config");
  }
  std::vector<std::size_t> predicted(count), labels(count);
  parallel_for(count, resolve_threads(threads), [&](std::size_t i) {
    Sample smp = data.sample(Split::test, i);
    labels[i] = smp.label;
    try {
      const RealTensor logits = model::forward_classifier(smp.image, config, params);
      std::size_t best = 0;
      for (std::size_t c = 1; c < logits.size(); ++c)
        if (logits[c] > logits[best]) best = c;
      predicted[i] = best;
    } catch (const NumericError&) {
      predicted[i] = config.num_classes;  // a diverged network classifies nothing
    }
  });
  return overall_accuracy(predicted, labels);
}

double evaluate(const std::filesystem::path& checkpoint, const SyntheticSpectralDataset& data, std::size_t count,
                std::size_t threads) {
  model::Checkpoint ck = model::load_checkpoint(checkpoint);
  return evaluate(ck.config, ck.params, data, count, threads);
}

}  // namespace fct::train
