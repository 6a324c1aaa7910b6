#include "ironbench/taskheads.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ironbench/error.hpp"
#include "ironbench/seed.hpp"

namespace ironbench {

std::string_view to_string(TaskKind task) noexcept {
  switch (task) {
    case TaskKind::task_a: return "task_a";
    case TaskKind::task_b: return "task_b";
    case TaskKind::task_c: return "task_c";
  }
  return "task_a";
}

std::string_view to_string(HeadKind head) noexcept {
  switch (head) {
    case HeadKind::binary: return "binary";
    case HeadKind::multilabel6: return "multilabel6";
    case HeadKind::pair: return "pair";
  }
  return "binary";
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "A" || name == "a" || name == "task_a") return TaskKind::task_a;
  if (name == "B" || name == "b" || name == "task_b") return TaskKind::task_b;
  if (name == "C" || name == "c" || name == "task_c") return TaskKind::task_c;
  fail(Errc::config, "unknown task '" + std::string(name) + "'");
}

HeadKind parse_head_kind(std::string_view name) {
  for (auto h : {HeadKind::binary, HeadKind::multilabel6, HeadKind::pair})
    if (to_string(h) == name) return h;
  fail(Errc::config, "unknown head '" + std::string(name) + "'");
}

HeadKind head_for(TaskKind task) noexcept {
  switch (task) {
    case TaskKind::task_a: return HeadKind::binary;
    case TaskKind::task_b: return HeadKind::multilabel6;
    case TaskKind::task_c: return HeadKind::pair;
  }
  return HeadKind::binary;
}

std::size_t num_classes(HeadKind head) noexcept { return head == HeadKind::multilabel6 ? kNumSublabels : 2; }

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double mx = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (auto& x : out) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (auto& x : out) x /= sum;
  return out;
}

double sigmoid(double z) noexcept {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

LossGrad ce_loss(std::span<const double> logits, int target, double weight) {
  require(target >= 0 && static_cast<std::size_t>(target) < logits.size(), Errc::label,
          "target " + std::to_string(target) + " outside the class range");
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (const double z : logits) sum += std::exp(z - mx);
  const double log_norm = mx + std::log(sum);
  LossGrad out;
  out.loss = weight * (log_norm - logits[static_cast<std::size_t>(target)]);
  out.grad.resize(logits.size());
  for (std::size_t c = 0; c < logits.size(); ++c)
    out.grad[c] = weight * (std::exp(logits[c] - log_norm) - (static_cast<int>(c) == target ? 1.0 : 0.0));
  return out;
}

LossGrad bce_multilabel(std::span<const double> logits, const Sublabels& targets) {
  require(logits.size() == kNumSublabels, Errc::schema, "multilabel head needs 6 logits");
  LossGrad out;
  out.grad.resize(kNumSublabels);
  const double n = static_cast<double>(kNumSublabels);
  for (std::size_t j = 0; j < kNumSublabels; ++j) {
    const double z = logits[j];
    const double t = targets[j];
    out.loss += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
    out.grad[j] = (sigmoid(z) - t) / n;
  }
  out.loss /= n;
  return out;
}

int predict_binary(std::span<const double> probabilities) {
  require(probabilities.size() == 2, Errc::schema, "binary decision needs 2 probabilities");
  return probabilities[1] > probabilities[0] ? 1 : 0;
}

Sublabels predict_multilabel(std::span<const double> probabilities, double threshold) {
  require(threshold > 0.0 && threshold < 1.0, Errc::config, "threshold must lie in (0, 1)");
  require(probabilities.size() == kNumSublabels, Errc::schema, "multilabel decision needs 6 probabilities");
  Sublabels out{};
  for (std::size_t j = 0; j < kNumSublabels; ++j) out[j] = probabilities[j] > threshold ? 1 : 0;
  return out;
}

int predict_pair(std::span<const double> probabilities) { return predict_binary(probabilities); }

std::vector<Sample> make_text_samples(TaskKind task, std::span<const TextExample> examples, std::size_t max_seq_len,
                                      bool require_labels) {
  require(task != TaskKind::task_c, Errc::schema, "task C samples are built from pairs");
  std::vector<Sample> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    Sample s;
    s.id = ex.id;
    s.group = ex.id;
    s.language = ex.language;
    s.input = encode(ex.text, max_seq_len);
    if (task == TaskKind::task_a) {
      s.labelled = ex.sarcastic.has_value();
      if (s.labelled) s.target.label = *ex.sarcastic;
    } else {
      s.labelled = ex.sublabels.has_value();
      if (s.labelled) s.target.labels = *ex.sublabels;
    }
    if (!s.labelled && require_labels)
      fail(Errc::label, ex.id + " has no " + (task == TaskKind::task_a ? "sarcastic label" : "sublabels"));
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> make_pair_samples(std::span<const PairExample> pairs, std::size_t max_seq_len) {
  std::vector<Sample> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    Sample s;
    s.id = p.id;
    s.group = std::string(pair_group_id(p.id));
    s.language = p.language;
    s.input = encode_pair(p.text_a, p.text_b, max_seq_len);
    s.target.label = p.label;
    out.push_back(std::move(s));
  }
  return out;
}

Model make_model(const ModelConfig& config, HeadKind head, std::uint64_t seed) {
  Model model;
  model.config = config;
  model.head = head;
  model.params = init_params(config, seed);
  std::mt19937_64 rng(derive_seed(seed, 0x68656164));
  std::normal_distribution<double> normal(0.0, 0.02);
  auto& w = model.params.add("head.weight", {config.d_model, num_classes(head)});
  for (auto& x : w.data) x = normal(rng);
  model.params.add("head.bias", {num_classes(head)});
  return model;
}

namespace {

Batch batch_of(std::span<const Sample* const> samples) {
  std::vector<const EncodedInput*> inputs;
  inputs.reserve(samples.size());
  for (const auto* s : samples) inputs.push_back(&s->input);
  return pad_batch(std::span<const EncodedInput* const>(inputs));
}

}  // namespace

double loss_and_gradient(const Model& model, std::span<const Sample* const> samples, Mode mode,
                         std::uint64_t dropout_seed, const LossOptions& options, ParamSet& grads) {
  if (samples.empty()) fail(Errc::empty_batch, "loss_and_gradient on an empty batch");
  const Batch batch = batch_of(samples);
  // Eval mode still caches activations but draws no dropout masks.
  ModelConfig config = model.config;
  if (mode == Mode::eval) config.dropout_rate = 0.0;
  const auto encoded = forward_cls(model.params, config, batch, Mode::train, dropout_seed);
  const auto& W = model.params.at("head.weight");
  const auto& b = model.params.at("head.bias");
  Matrix logits = encoded.cls * W.matrix();
  logits.rowwise() += b.row_vector();

  const auto n = samples.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix d_logits(logits.rows(), logits.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const Eigen::RowVectorXd z = logits.row(row);
    const std::span<const double> zs(z.data(), static_cast<std::size_t>(z.size()));
    LossGrad lg;
    if (model.head == HeadKind::multilabel6) {
      lg = bce_multilabel(zs, samples[i]->target.labels);
    } else {
      const int t = samples[i]->target.label;
      const double w = options.class_weights.empty() ? 1.0 : options.class_weights.at(static_cast<std::size_t>(t));
      lg = ce_loss(zs, t, w);
    }
    if (!std::isfinite(lg.loss)) fail(Errc::numerics, "non-finite loss for " + samples[i]->id);
    total += lg.loss;
    for (std::size_t c = 0; c < lg.grad.size(); ++c) d_logits(row, static_cast<Eigen::Index>(c)) = lg.grad[c] * inv_n;
  }

  grads.at("head.weight").matrix().noalias() += encoded.cls.transpose() * d_logits;
  grads.at("head.bias").row_vector() += d_logits.colwise().sum();
  const Matrix d_cls = d_logits * W.matrix().transpose();
  backward(model.params, *encoded.cache, d_cls, grads);
  return total * inv_n;
}

Matrix compute_logits(const Model& model, std::span<const Sample* const> samples) {
  const Batch batch = batch_of(samples);
  const auto encoded = forward_cls(model.params, model.config, batch, Mode::eval, 0);
  Matrix logits = encoded.cls * model.params.at("head.weight").matrix();
  logits.rowwise() += model.params.at("head.bias").row_vector();
  return logits;
}

Matrix probabilities_from_logits(const Matrix& logits, HeadKind head) {
  Matrix probs(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    if (head == HeadKind::multilabel6) {
      for (Eigen::Index c = 0; c < logits.cols(); ++c) probs(r, c) = sigmoid(logits(r, c));
    } else {
      const Eigen::RowVectorXd z = logits.row(r);
      const auto p = softmax(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
      for (Eigen::Index c = 0; c < logits.cols(); ++c) probs(r, c) = p[static_cast<std::size_t>(c)];
    }
  }
  return probs;
}

Matrix predict_logits(const Model& model, std::span<const Sample> samples, std::size_t batch_size) {
  const auto classes = static_cast<Eigen::Index>(num_classes(model.head));
  Matrix logits(static_cast<Eigen::Index>(samples.size()), classes);
  batch_size = std::max<std::size_t>(batch_size, 1);
  std::vector<const Sample*> chunk;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    chunk.clear();
    for (std::size_t i = start; i < std::min(samples.size(), start + batch_size); ++i) chunk.push_back(&samples[i]);
    const Matrix z = compute_logits(model, chunk);
    logits.middleRows(static_cast<Eigen::Index>(start), z.rows()) = z;
  }
  return logits;
}

Matrix predict_proba(const Model& model, std::span<const Sample> samples, std::size_t batch_size) {
  return probabilities_from_logits(predict_logits(model, samples, batch_size), model.head);
}

Decision decide(std::span<const double> probabilities, HeadKind head, double threshold) {
  Decision d;
  switch (head) {
    case HeadKind::binary: d.label = predict_binary(probabilities); break;
    case HeadKind::pair: d.label = predict_pair(probabilities); break;
    case HeadKind::multilabel6: d.labels = predict_multilabel(probabilities, threshold); break;
  }
  return d;
}

std::vector<Decision> decide_all(const Matrix& probabilities, HeadKind head, double threshold) {
  std::vector<Decision> out;
  out.reserve(static_cast<std::size_t>(probabilities.rows()));
  for (Eigen::Index r = 0; r < probabilities.rows(); ++r) {
    const Eigen::RowVectorXd row = probabilities.row(r);
    out.push_back(decide(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())), head, threshold));
  }
  return out;
}

}  // namespace ironbench
