#include "ironbench/optim.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <thread>

#include <json.hpp>

#include "ironbench/seed.hpp"

namespace ironbench {

void TrainConfig::validate() const {
  require(peak_lr > 0.0, Errc::config, "peak_lr must be positive");
  require(warmup_fraction > 0.0 && warmup_fraction < 1.0, Errc::config, "warmup_fraction must lie in (0, 1)");
  require(weight_decay >= 0.0, Errc::config, "weight_decay must be non-negative");
  require(epochs >= 1, Errc::config, "epochs must be at least 1");
  require(micro_batch_size >= 1 && accumulation_steps >= 1 && worker_count >= 1, Errc::config,
          "batch sizes and worker count must be positive");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, Errc::config, "betas must lie in [0, 1)");
  require(epsilon > 0.0, Errc::config, "epsilon must be positive");
  require(multilabel_threshold > 0.0 && multilabel_threshold < 1.0, Errc::config,
          "multilabel_threshold must lie in (0, 1)");
  for (double w : class_weights) require(w > 0.0, Errc::config, "class weights must be positive");
}

TrainConfig TrainConfig::reference_profile() {
  TrainConfig c;
  c.peak_lr = 1e-5;
  c.epochs = 20;
  c.micro_batch_size = 1;
  c.accumulation_steps = 8;
  c.worker_count = 8;
  return c;
}

OptimizerState OptimizerState::for_params(const ParamSet& params) {
  return OptimizerState{params.zeros_like(), params.zeros_like(), 0};
}

double lr_at(std::uint64_t step, std::uint64_t total_steps, double peak_lr, double warmup_fraction) {
  require(total_steps >= 2, Errc::config, "schedule needs at least 2 steps");
  require(step >= 1 && step <= total_steps, Errc::config,
          "step " + std::to_string(step) + " outside [1, " + std::to_string(total_steps) + "]");
  const auto warmup = static_cast<std::uint64_t>(std::llround(warmup_fraction * static_cast<double>(total_steps)));
  if (step <= warmup) return peak_lr * static_cast<double>(step) / static_cast<double>(warmup);
  return peak_lr * static_cast<double>(total_steps - step) / static_cast<double>(total_steps - warmup);
}

bool is_decay_exempt(const std::string& name, std::span<const std::string> patterns) {
  return std::any_of(patterns.begin(), patterns.end(),
                     [&](const std::string& p) { return fnmatch(p.c_str(), name.c_str(), 0) == 0; });
}

void adamw_step(ParamSet& params, const ParamSet& grads, OptimizerState& state, double lr, const TrainConfig& config) {
  require(params.same_layout(grads), Errc::state, "gradient layout differs from parameters");
  require(params.same_layout(state.first_moment) && params.same_layout(state.second_moment), Errc::state,
          "optimizer state layout differs from parameters");
  require(lr >= 0.0, Errc::config, "negative learning rate");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& theta = params.tensor(i).data;
    const auto& g = grads.tensor(i).data;
    auto& m = state.first_moment.tensor(i).data;
    auto& v = state.second_moment.tensor(i).data;
    const double decay = is_decay_exempt(params.name(i), config.decay_exempt_names) ? 0.0 : config.weight_decay;
    for (std::size_t j = 0; j < theta.size(); ++j) {
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g[j];
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      theta[j] -= lr * decay * theta[j] + lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

void GradientAccumulator::add(const ParamSet& grads) {
  sum_.add(grads);
  ++count_;
}

ParamSet GradientAccumulator::mean() const {
  require(count_ >= 1, Errc::state, "mean of zero accumulated gradients");
  ParamSet out = sum_;
  out.scale(1.0 / static_cast<double>(count_));
  return out;
}

void GradientAccumulator::reset() {
  sum_.set_zero();
  count_ = 0;
}

ParamSet accumulate(std::span<const ParamSet> grads) {
  require(!grads.empty(), Errc::state, "accumulate needs at least one gradient");
  GradientAccumulator acc(grads.front());
  for (const auto& g : grads) acc.add(g);
  return acc.mean();
}

std::string to_json_line(const EpochLog& entry) {
  nlohmann::ordered_json j;
  j["epoch"] = entry.epoch;
  j["train_loss"] = entry.train_loss;
  j["eval_metric"] = entry.eval_metric ? nlohmann::ordered_json(*entry.eval_metric) : nlohmann::ordered_json();
  j["lr_last"] = entry.lr_last;
  j["seconds"] = entry.seconds;
  return j.dump();
}

std::uint64_t updates_per_epoch(std::size_t examples, const TrainConfig& config) {
  const auto per_update = config.effective_batch();
  return (examples + per_update - 1) / per_update;
}

TrainResult train_epochs(Model model, std::span<const Sample> train, std::span<const Sample> eval,
                         const TrainConfig& config, const MetricFn& metric,
                         const std::function<void(const EpochLog&)>& on_epoch) {
  config.validate();
  require(!train.empty(), Errc::config, "training set is empty");
  {
    std::set<std::string> eval_ids;
    for (const auto& s : eval) eval_ids.insert(s.id);
    for (const auto& s : train)
      require(!eval_ids.count(s.id), Errc::state, "sample " + s.id + " is in both the training and eval sets");
    for (const auto& s : train) require(s.labelled, Errc::label, "training sample " + s.id + " has no label");
  }
  require(model.head != HeadKind::binary || config.class_weights.empty() || config.class_weights.size() == 2,
          Errc::config, "class_weights needs one weight per class");

  const std::uint64_t per_epoch = updates_per_epoch(train.size(), config);
  const std::uint64_t total_steps = per_epoch * config.epochs;
  require(total_steps >= 2, Errc::config, "fewer than 2 optimizer updates in total");

  const std::uint64_t shuffle_seed = derive_seed(config.seed, seed_stream::shuffle);
  const std::uint64_t dropout_seed = derive_seed(config.seed, seed_stream::dropout);
  const LossOptions loss_options{config.class_weights};
  const std::size_t workers = config.worker_count;
  const std::size_t per_update = config.effective_batch();

  OptimizerState state = OptimizerState::for_params(model.params);
  TrainResult result;
  result.best = model;
  result.total_steps = total_steps;
  std::uint64_t micro_index = 0;
  std::vector<ParamSet> worker_sums(workers, model.params.zeros_like());

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(derive_seed(shuffle_seed, epoch));
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    double lr = 0.0;
    for (std::uint64_t u = 0; u < per_epoch; ++u) {
      const std::size_t begin = static_cast<std::size_t>(u) * per_update;
      const std::size_t end = std::min(train.size(), begin + per_update);
      std::vector<std::vector<const Sample*>> micro;
      for (std::size_t i = begin; i < end; i += config.micro_batch_size) {
        auto& mb = micro.emplace_back();
        for (std::size_t j = i; j < std::min(end, i + config.micro_batch_size); ++j) {
          mb.push_back(&train[order[j]]);
          result.gradient_ids.insert(train[order[j]].id);
        }
      }
      std::vector<double> losses(micro.size(), 0.0);
      std::vector<std::string> errors(workers);
      auto work = [&](std::size_t w) {
        try {
          worker_sums[w].set_zero();
          for (std::size_t m = w; m < micro.size(); m += workers)
            losses[m] = loss_and_gradient(model, micro[m], Mode::train, derive_seed(dropout_seed, micro_index + m),
                                          loss_options, worker_sums[w]);
        } catch (const std::exception& e) {
          errors[w] = e.what();
        }
      };
      if (workers == 1) {
        work(0);
      } else {
        std::vector<std::thread> threads;
        for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work, w);
        for (auto& t : threads) t.join();
      }
      micro_index += micro.size();
      for (const auto& e : errors)
        if (!e.empty()) throw TrainingAborted("epoch " + std::to_string(epoch) + ": " + e, result.best);

      ParamSet grads = worker_sums[0];
      for (std::size_t w = 1; w < workers; ++w) grads.add(worker_sums[w]);
      grads.scale(1.0 / static_cast<double>(micro.size()));
      for (double l : losses) loss_sum += l;
      loss_count += micro.size();
      if (!grads.all_finite())
        throw TrainingAborted("non-finite gradient in epoch " + std::to_string(epoch), result.best);

      lr = lr_at(state.step + 1, total_steps, config.peak_lr, config.warmup_fraction);
      adamw_step(model.params, grads, state, lr, config);
      model.step = state.step;
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(loss_count);
    entry.lr_last = lr;
    if (!std::isfinite(entry.train_loss))
      throw TrainingAborted("non-finite training loss in epoch " + std::to_string(epoch), result.best);
    if (!eval.empty()) entry.eval_metric = metric(predict_proba(model, eval), eval);
    entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    const bool improved = eval.empty() || !result.best_metric || (entry.eval_metric && *entry.eval_metric > *result.best_metric);
    if (improved) {
      result.best = model;
      result.best_epoch = epoch;
      result.best_metric = entry.eval_metric;
    }
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  return result;
}

}  // namespace ironbench
