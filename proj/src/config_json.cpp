#include "ironbench/config_json.hpp"

#include <cstdio>

#include "ironbench/error.hpp"

namespace ironbench {

namespace {

template <typename T>
void read(const ojson& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(Errc::config, where + "." + key + " has the wrong type");
  }
}

void require_object(const ojson& j, const std::string& where) {
  require(j.is_object(), Errc::config, where + " must be an object");
}

}  // namespace

void reject_unknown_keys(const ojson& j, std::initializer_list<const char*> allowed, const std::string& where) {
  require_object(j, where);
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed) known = known || item.key() == k;
    if (!known) fail(Errc::config, "unknown key " + where + "." + item.key());
  }
}

ojson to_json(const ModelConfig& c) {
  ojson j;
  j["vocab_size"] = c.vocab_size;
  j["d_model"] = c.d_model;
  j["n_layers"] = c.n_layers;
  j["n_heads"] = c.n_heads;
  j["d_ff"] = c.d_ff;
  j["max_seq_len"] = c.max_seq_len;
  j["dropout_rate"] = c.dropout_rate;
  j["n_segments"] = c.n_segments;
  return j;
}

ModelConfig model_config_from_json(const ojson& j, const std::string& where) {
  reject_unknown_keys(j, {"vocab_size", "d_model", "n_layers", "n_heads", "d_ff", "max_seq_len", "dropout_rate",
                          "n_segments"},
                      where);
  ModelConfig c;
  read(j, "vocab_size", c.vocab_size, where);
  read(j, "d_model", c.d_model, where);
  read(j, "n_layers", c.n_layers, where);
  read(j, "n_heads", c.n_heads, where);
  read(j, "d_ff", c.d_ff, where);
  read(j, "max_seq_len", c.max_seq_len, where);
  read(j, "dropout_rate", c.dropout_rate, where);
  read(j, "n_segments", c.n_segments, where);
  return c;
}

ojson to_json(const TrainConfig& c) {
  ojson j;
  j["peak_lr"] = c.peak_lr;
  j["warmup_fraction"] = c.warmup_fraction;
  j["weight_decay"] = c.weight_decay;
  j["epochs"] = c.epochs;
  j["micro_batch_size"] = c.micro_batch_size;
  j["accumulation_steps"] = c.accumulation_steps;
  j["worker_count"] = c.worker_count;
  j["betas"] = {c.beta1, c.beta2};
  j["epsilon"] = c.epsilon;
  j["seed"] = c.seed;
  j["decay_exempt_names"] = c.decay_exempt_names;
  j["class_weights"] = c.class_weights;
  j["multilabel_threshold"] = c.multilabel_threshold;
  return j;
}

TrainConfig train_config_from_json(const ojson& j, const std::string& where) {
  reject_unknown_keys(j, {"peak_lr", "warmup_fraction", "weight_decay", "epochs", "micro_batch_size",
                          "accumulation_steps", "worker_count", "betas", "epsilon", "seed", "decay_exempt_names",
                          "class_weights", "multilabel_threshold"},
                      where);
  TrainConfig c;
  read(j, "peak_lr", c.peak_lr, where);
  read(j, "warmup_fraction", c.warmup_fraction, where);
  read(j, "weight_decay", c.weight_decay, where);
  read(j, "epochs", c.epochs, where);
  read(j, "micro_batch_size", c.micro_batch_size, where);
  read(j, "accumulation_steps", c.accumulation_steps, where);
  read(j, "worker_count", c.worker_count, where);
  if (j.contains("betas")) {
    std::vector<double> betas;
    read(j, "betas", betas, where);
    require(betas.size() == 2, Errc::config, where + ".betas needs two values");
    c.beta1 = betas[0];
    c.beta2 = betas[1];
  }
  read(j, "epsilon", c.epsilon, where);
  read(j, "seed", c.seed, where);
  read(j, "decay_exempt_names", c.decay_exempt_names, where);
  read(j, "class_weights", c.class_weights, where);
  read(j, "multilabel_threshold", c.multilabel_threshold, where);
  return c;
}

ojson to_json(const MetricsReport& r) {
  ojson j;
  j["task"] = std::string(to_string(r.task));
  j["language"] = r.language;
  j["examples"] = r.examples;
  j["counts"] = {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"tn", r.counts.tn}, {"fn", r.counts.fn}};
  j["accuracy"] = r.accuracy;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  if (r.per_label_f1) {
    ojson labels;
    for (std::size_t i = 0; i < kNumSublabels; ++i) labels[std::string(kSublabelNames[i])] = (*r.per_label_f1)[i];
    j["per_label_f1"] = labels;
  }
  if (r.macro_f1) j["macro_f1"] = *r.macro_f1;
  if (r.macro_f1_with_none) j["macro_f1_with_none"] = *r.macro_f1_with_none;
  j["score"] = r.score;
  return j;
}

MetricsReport metrics_report_from_json(const ojson& j) {
  MetricsReport r;
  try {
    r.task = parse_task_kind(j.at("task").get<std::string>());
    r.language = j.at("language").get<std::string>();
    r.examples = j.at("examples").get<std::size_t>();
    const auto& c = j.at("counts");
    r.counts = {c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(), c.at("tn").get<std::size_t>(),
                c.at("fn").get<std::size_t>()};
    r.accuracy = j.at("accuracy").get<double>();
    r.precision = j.at("precision").get<double>();
    r.recall = j.at("recall").get<double>();
    r.f1 = j.at("f1").get<double>();
    if (j.contains("per_label_f1")) {
      std::array<double, kNumSublabels> f{};
      for (std::size_t i = 0; i < kNumSublabels; ++i)
        f[i] = j.at("per_label_f1").at(std::string(kSublabelNames[i])).get<double>();
      r.per_label_f1 = f;
    }
    if (j.contains("macro_f1")) r.macro_f1 = j.at("macro_f1").get<double>();
    if (j.contains("macro_f1_with_none")) r.macro_f1_with_none = j.at("macro_f1_with_none").get<double>();
    r.score = j.at("score").get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::schema, std::string("metrics report: ") + e.what());
  }
  return r;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash) noexcept {
  for (const unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace ironbench
