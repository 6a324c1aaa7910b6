#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ironbench/error.hpp"
#include "ironbench/taskheads.hpp"

namespace ironbench {

struct TrainConfig {
  double peak_lr = 1e-3;
  double warmup_fraction = 0.10;
  double weight_decay = 0.01;
  std::size_t epochs = 30;
  std::size_t micro_batch_size = 8;
  std::size_t accumulation_steps = 1;
  std::size_t worker_count = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 42;
  std::vector<std::string> decay_exempt_names = {"*.bias", "*.norm.*"};
  std::vector<double> class_weights;  // empty: unweighted loss
  double multilabel_threshold = 0.5;

  std::size_t effective_batch() const noexcept { return micro_batch_size * accumulation_steps * worker_count; }
  void validate() const;

  // 1e-5 peak, 20 epochs, batch 1 x 8 accumulation x 8 workers = 64.
  static TrainConfig reference_profile();
  bool operator==(const TrainConfig&) const = default;
};

struct OptimizerState {
  ParamSet first_moment;
  ParamSet second_moment;
  std::uint64_t step = 0;

  static OptimizerState for_params(const ParamSet& params);
};

/// Linear warmup over the first round(warmup_fraction * total_steps) updates,
/// then linear decay to zero at total_steps. Steps count from 1.
double lr_at(std::uint64_t step, std::uint64_t total_steps, double peak_lr, double warmup_fraction);

bool is_decay_exempt(const std::string& name, std::span<const std::string> patterns);

/// Bias-corrected Adam with decoupled weight decay (theta -= lr * wd * theta)
/// on every parameter not matching config.decay_exempt_names.
void adamw_step(ParamSet& params, const ParamSet& grads, OptimizerState& state, double lr, const TrainConfig& config);

/// Running sum of micro-batch gradients; mean() divides by the number added.
class GradientAccumulator {
 public:
  explicit GradientAccumulator(const ParamSet& layout) : sum_(layout.zeros_like()) {}

  void add(const ParamSet& grads);
  std::size_t count() const noexcept { return count_; }
  ParamSet mean() const;
  void reset();

 private:
  ParamSet sum_;
  std::size_t count_ = 0;
};

ParamSet accumulate(std::span<const ParamSet> grads);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> eval_metric;
  double lr_last = 0.0;
  double seconds = 0.0;
};

std::string to_json_line(const EpochLog& entry);

using MetricFn = std::function<double(const Matrix& probabilities, std::span<const Sample> eval)>;

struct TrainResult {
  Model best;
  std::size_t best_epoch = 0;
  std::optional<double> best_metric;
  std::vector<EpochLog> log;
  std::uint64_t total_steps = 0;
  std::set<std::string> gradient_ids;  // every sample id that fed a gradient
};

// Thrown on a non-finite loss or gradient; carries the last finite model.
class TrainingAborted : public Error {
 public:
  TrainingAborted(const std::string& message, Model last_good)
      : Error(Errc::numerics, message), last_good_(std::move(last_good)) {}
  const Model& last_good() const noexcept { return last_good_; }

 private:
  Model last_good_;
};

/// Epoch loop: seeded shuffle, micro-batches averaged over
/// accumulation_steps x worker_count before each AdamW update, evaluation after
/// every epoch. Returns the model from the best-scoring epoch (earliest on
/// ties); with an empty eval set the last epoch wins.
TrainResult train_epochs(Model model, std::span<const Sample> train, std::span<const Sample> eval,
                         const TrainConfig& config, const MetricFn& metric,
                         const std::function<void(const EpochLog&)>& on_epoch = {});

std::uint64_t updates_per_epoch(std::size_t examples, const TrainConfig& config);

}  // namespace ironbench
