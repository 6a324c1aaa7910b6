#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ironbench/corpus.hpp"
#include "ironbench/encoder.hpp"

namespace ironbench {

enum class TaskKind { task_a, task_b, task_c };
enum class HeadKind { binary, multilabel6, pair };

std::string_view to_string(TaskKind task) noexcept;
std::string_view to_string(HeadKind head) noexcept;
TaskKind parse_task_kind(std::string_view name);  // "A"/"B"/"C" or "task_a"...
HeadKind parse_head_kind(std::string_view name);
HeadKind head_for(TaskKind task) noexcept;
std::size_t num_classes(HeadKind head) noexcept;

/// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> logits);
double sigmoid(double z) noexcept;

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

/// -log softmax(logits)[target], scaled by `weight`; grad = weight * (p - onehot).
LossGrad ce_loss(std::span<const double> logits, int target, double weight = 1.0);

/// Mean over the six labels of the logits-form binary cross-entropy
/// max(z,0) - z*t + log(1 + exp(-|z|)); grad = (sigmoid(z) - t) / 6.
LossGrad bce_multilabel(std::span<const double> logits, const Sublabels& targets);

// Ties go to class 0.
int predict_binary(std::span<const double> probabilities);
Sublabels predict_multilabel(std::span<const double> probabilities, double threshold = 0.5);
int predict_pair(std::span<const double> probabilities);

struct Target {
  int label = 0;
  Sublabels labels{};
};

// One encoded, labelled input. `group` ties augmented pair orders to the
// example they came from so fold assignment keeps them together.
struct Sample {
  std::string id;
  std::string group;
  Language language = Language::en;
  EncodedInput input;
  Target target;
  bool labelled = true;
};

/// Task A needs `sarcastic`, task B needs `sublabels`. Unlabelled examples are
/// kept with labelled = false when `require_labels` is off.
std::vector<Sample> make_text_samples(TaskKind task, std::span<const TextExample> examples, std::size_t max_seq_len,
                                      bool require_labels = true);
std::vector<Sample> make_pair_samples(std::span<const PairExample> pairs, std::size_t max_seq_len);

struct Model {
  ModelConfig config;
  HeadKind head = HeadKind::binary;
  ParamSet params;  // encoder arrays followed by head.weight / head.bias
  std::uint64_t step = 0;
};

/// Encoder from init_params plus a head drawn with the same N(0, 0.02^2) rule.
Model make_model(const ModelConfig& config, HeadKind head, std::uint64_t seed);

struct LossOptions {
  std::vector<double> class_weights;  // empty: unweighted
};

/// Mean loss over `samples`; the gradient of that mean is added into `grads`.
double loss_and_gradient(const Model& model, std::span<const Sample* const> samples, Mode mode,
                         std::uint64_t dropout_seed, const LossOptions& options, ParamSet& grads);

/// Logits for a batch (eval mode).
Matrix compute_logits(const Model& model, std::span<const Sample* const> samples);

/// n x C logits in eval mode, computed `batch_size` rows at a time.
Matrix predict_logits(const Model& model, std::span<const Sample> samples, std::size_t batch_size = 32);

/// n x C probabilities (softmax or sigmoid per head) in eval mode.
Matrix predict_proba(const Model& model, std::span<const Sample> samples, std::size_t batch_size = 32);

Matrix probabilities_from_logits(const Matrix& logits, HeadKind head);

struct Decision {
  int label = 0;        // binary / pair heads
  Sublabels labels{};   // multilabel head
};

Decision decide(std::span<const double> probabilities, HeadKind head, double threshold = 0.5);
std::vector<Decision> decide_all(const Matrix& probabilities, HeadKind head, double threshold = 0.5);

}  // namespace ironbench
