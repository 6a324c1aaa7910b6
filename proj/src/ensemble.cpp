#include "ironbench/ensemble.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "ironbench/checkpoint.hpp"
#include "ironbench/error.hpp"
#include "ironbench/multilingual.hpp"
#include "ironbench/seed.hpp"

namespace ironbench {

namespace fs = std::filesystem;

ojson RunSpec::to_json() const {
  ojson j;
  j["task"] = std::string(ironbench::to_string(task));
  j["k"] = k;
  j["fold_index"] = fold_index;
  j["fold_seed"] = fold_seed;
  j["lr"] = lr;
  j["epochs"] = epochs;
  j["dataset_id"] = dataset_id;
  j["config_id"] = config_id;
  return j;
}

RunSpec RunSpec::from_json(const ojson& j) {
  RunSpec s;
  try {
    s.task = parse_task_kind(j.at("task").get<std::string>());
    s.k = j.at("k").get<int>();
    s.fold_index = j.at("fold_index").get<int>();
    s.fold_seed = j.at("fold_seed").get<std::uint64_t>();
    s.lr = j.at("lr").get<double>();
    s.epochs = j.at("epochs").get<std::size_t>();
    s.dataset_id = j.at("dataset_id").get<std::string>();
    s.config_id = j.at("config_id").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::schema, std::string("run spec: ") + e.what());
  }
  return s;
}

std::string RunSpec::key() const { return "run-" + hex64(fnv1a64(to_json().dump())); }

std::vector<RunSpec> plan_runs(int k, std::span<const std::uint64_t> seeds, const Grid& grid, TaskKind task,
                               const std::string& dataset_id, const std::string& config_id) {
  require(k >= 2, Errc::config, "k must be at least 2");
  require(!seeds.empty(), Errc::config, "at least one fold seed is needed");
  require(!grid.lrs.empty() && !grid.epochs.empty(), Errc::config, "the grid needs at least one lr and epoch count");
  std::set<std::uint64_t> seen;
  for (auto s : seeds) require(seen.insert(s).second, Errc::config, "duplicate fold seed " + std::to_string(s));
  std::vector<RunSpec> runs;
  for (const auto seed : seeds)
    for (const double lr : grid.lrs)
      for (const auto epochs : grid.epochs)
        for (int f = 0; f < k; ++f) runs.push_back(RunSpec{k, f, seed, lr, epochs, dataset_id, config_id, task});
  return runs;
}

std::string dataset_fingerprint(std::span<const Sample> samples) {
  std::uint64_t h = fnv1a64("");
  auto mix = [&h](std::string_view bytes) {
    h = fnv1a64(bytes, h);
    h = fnv1a64(std::string_view("\x1f", 1), h);
  };
  for (const auto& s : samples) {
    mix(s.id);
    mix(s.group);
    mix(to_string(s.language));
    mix(std::string_view(reinterpret_cast<const char*>(s.input.ids.data()), s.input.ids.size() * sizeof(s.input.ids[0])));
    mix(std::string_view(reinterpret_cast<const char*>(s.input.segment_ids.data()),
                         s.input.segment_ids.size() * sizeof(s.input.segment_ids[0])));
    mix(std::to_string(s.target.label));
    mix(std::string_view(reinterpret_cast<const char*>(s.target.labels.data()), s.target.labels.size()));
  }
  return hex64(h);
}

std::string config_fingerprint(const ModelConfig& model, const TrainConfig& base, bool stratify, double threshold,
                               MacroVariant variant) {
  ojson j;
  j["model"] = to_json(model);
  ojson t = to_json(base);
  // These come from the run spec instead.
  t.erase("peak_lr");
  t.erase("epochs");
  t.erase("seed");
  j["train"] = t;
  j["stratify"] = stratify;
  j["threshold"] = threshold;
  j["macro_variant"] = variant == MacroVariant::with_none ? "with_none" : "six_labels";
  return hex64(fnv1a64(j.dump()));
}

std::uint64_t run_seed(const RunSpec& spec) noexcept {
  return derive_seed(spec.fold_seed, static_cast<std::uint64_t>(spec.fold_index));
}

TrainConfig run_train_config(const RunSpec& spec, const TrainConfig& base) {
  TrainConfig c = base;
  c.peak_lr = spec.lr;
  c.epochs = spec.epochs;
  c.seed = run_seed(spec);
  return c;
}

FoldPlan plan_folds(std::span<const Sample> samples, int k, std::uint64_t seed, bool stratify) {
  std::vector<std::string> groups;
  std::vector<int> strata;
  std::set<std::string> seen;
  for (const auto& s : samples) {
    if (!seen.insert(s.group).second) continue;
    groups.push_back(s.group);
    // Task B rows stratify on whether any sublabel is set.
    const bool any = std::any_of(s.target.labels.begin(), s.target.labels.end(), [](auto b) { return b != 0; });
    strata.push_back(s.target.label != 0 || any ? 1 : 0);
  }
  return stratify ? kfold_split(groups, k, seed, strata) : kfold_split(groups, k, seed);
}

FoldSplit split_fold(std::span<const Sample> samples, const FoldPlan& plan, int fold_index) {
  require(fold_index >= 0 && fold_index < plan.k, Errc::config, "fold index out of range");
  FoldSplit out;
  for (const auto& s : samples) (plan.fold(s.group) == fold_index ? out.eval : out.train).push_back(s);
  return out;
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::missing_artifact, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io, "cannot write " + path.string());
  out << text;
  if (!out) fail(Errc::io, "short write to " + path.string());
}

ojson parse_json_file(const fs::path& path) {
  try {
    return ojson::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse, path.string() + ": " + e.what());
  }
}

}  // namespace

Registry::Registry(fs::path root) : root_(std::move(root)) {}

bool Registry::completed(const std::string& key) const {
  std::error_code ec;
  return fs::exists(run_dir(key) / "eval.json", ec) && fs::exists(run_dir(key) / "checkpoint.bin", ec);
}

std::vector<std::string> Registry::completed_keys() const {
  std::vector<std::string> keys;
  std::error_code ec;
  if (!fs::is_directory(root_, ec)) return keys;
  for (const auto& entry : fs::directory_iterator(root_)) {
    const auto name = entry.path().filename().string();
    if (entry.is_directory() && name.rfind("run-", 0) == 0 && completed(name)) keys.push_back(name);
  }
  std::sort(keys.begin(), keys.end());
  return keys;
}

Model Registry::load_model(const std::string& key) const { return load_checkpoint(run_dir(key) / "checkpoint.bin"); }

ojson Registry::load_eval(const std::string& key) const { return parse_json_file(run_dir(key) / "eval.json"); }

RunSpec Registry::load_spec(const std::string& key) const {
  return RunSpec::from_json(parse_json_file(run_dir(key) / "spec.json"));
}

void Registry::commit(const RunSpec& spec, const Model& model, std::span<const EpochLog> log, const ojson& eval) const {
  const std::string key = spec.key();
  fs::create_directories(root_);
  static std::atomic<std::uint64_t> counter{0};
  const fs::path tmp = root_ / (".tmp-" + key + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  write_file(tmp / "spec.json", spec.to_json().dump(2) + "\n");
  save_checkpoint(tmp / "checkpoint.bin", model);
  std::string lines;
  for (const auto& e : log) lines += to_json_line(e) + "\n";
  write_file(tmp / "log.jsonl", lines);
  write_file(tmp / "eval.json", eval.dump(2) + "\n");
  // A leftover directory without eval.json is an interrupted run.
  if (fs::exists(run_dir(key)) && !completed(key)) fs::remove_all(run_dir(key));
  std::error_code ec;
  fs::rename(tmp, run_dir(key), ec);
  if (ec) {
    fs::remove_all(tmp);
    require(completed(key), Errc::io, "cannot commit run " + key + ": " + ec.message());
  }
}

std::string_view to_string(RunStatus status) noexcept {
  switch (status) {
    case RunStatus::trained: return "trained";
    case RunStatus::cached: return "cached";
    case RunStatus::failed: return "failed";
  }
  return "failed";
}

namespace {

RunOutcome cached_outcome(const RunSpec& spec, const Registry& registry) {
  RunOutcome out;
  out.spec = spec;
  out.status = RunStatus::cached;
  const auto eval = registry.load_eval(spec.key());
  if (eval.contains("best_metric") && !eval["best_metric"].is_null()) out.best_metric = eval["best_metric"].get<double>();
  out.best_epoch = eval.value("best_epoch", std::size_t{0});
  return out;
}

RunOutcome train_one(const RunSpec& spec, const FoldPlan& plan, std::span<const Sample> samples,
                     const ModelConfig& model_config, const TrainConfig& base, const Registry& registry,
                     double threshold, MacroVariant variant) {
  RunOutcome out;
  out.spec = spec;
  const auto split = split_fold(samples, plan, spec.fold_index);
  const TrainConfig config = run_train_config(spec, base);
  const Model model = make_model(model_config, head_for(spec.task), derive_seed(config.seed, seed_stream::init));
  const TaskKind task = spec.task;
  const auto metric = [task, threshold, variant](const Matrix& p, std::span<const Sample> eval) {
    return official_metric(task, p, eval, threshold, variant);
  };
  const auto result = train_epochs(model, split.train, split.eval, config, metric);

  ojson eval;
  eval["key"] = spec.key();
  eval["fold_index"] = spec.fold_index;
  eval["train_examples"] = split.train.size();
  eval["eval_examples"] = split.eval.size();
  eval["best_epoch"] = result.best_epoch;
  eval["best_metric"] = result.best_metric ? ojson(*result.best_metric) : ojson();
  if (!split.eval.empty()) {
    const auto reports = eval_per_language(result.best, task, split.eval, threshold, {}, variant);
    eval["report"] = to_json(reports.pooled);
    ojson per;
    for (const auto& [lang, r] : reports.per_language) per[lang] = to_json(r);
    eval["per_language"] = per;
  }
  registry.commit(spec, result.best, result.log, eval);
  out.status = RunStatus::trained;
  out.best_metric = result.best_metric;
  out.best_epoch = result.best_epoch;
  return out;
}

}  // namespace

std::vector<RunOutcome> execute_runs(std::span<const RunSpec> runs, std::span<const Sample> samples,
                                     const ModelConfig& model_config, const TrainConfig& base, const Registry& registry,
                                     const ExecuteOptions& options) {
  require(!samples.empty(), Errc::config, "no training samples");
  // One fold plan per (k, seed), shared by every grid point.
  std::map<std::pair<int, std::uint64_t>, FoldPlan> plans;
  for (const auto& r : runs) {
    const auto key = std::make_pair(r.k, r.fold_seed);
    if (!plans.count(key)) plans.emplace(key, plan_folds(samples, r.k, r.fold_seed, options.stratify));
  }

  std::vector<RunOutcome> outcomes(runs.size());
  std::atomic<std::size_t> next{0};
  std::mutex report_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      const auto& spec = runs[i];
      RunOutcome out;
      try {
        out = registry.completed(spec.key())
                  ? cached_outcome(spec, registry)
                  : train_one(spec, plans.at({spec.k, spec.fold_seed}), samples, model_config, base, registry,
                              options.threshold, options.variant);
      } catch (const std::exception& e) {
        out = RunOutcome{};
        out.spec = spec;
        out.status = RunStatus::failed;
        out.error = e.what();
      }
      outcomes[i] = out;
      std::lock_guard lock(report_mutex);
      if (out.status == RunStatus::failed) warn("run " + spec.key() + " failed: " + out.error);
      if (options.on_done) options.on_done(out);
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, runs.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t j = 0; j < jobs; ++j) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  return outcomes;
}

std::vector<RunOutcome> registry_outcomes(std::span<const RunSpec> runs, const Registry& registry) {
  std::vector<RunOutcome> out;
  for (const auto& spec : runs) {
    if (registry.completed(spec.key())) {
      out.push_back(cached_outcome(spec, registry));
    } else {
      RunOutcome missing;
      missing.spec = spec;
      missing.error = "not in the registry";
      out.push_back(missing);
    }
  }
  return out;
}

std::vector<RunSpec> select_members(std::span<const RunOutcome> outcomes, bool best_per_fold) {
  std::vector<RunSpec> members;
  if (!best_per_fold) {
    for (const auto& o : outcomes)
      if (o.ok()) members.push_back(o.spec);
    return members;
  }
  std::vector<std::pair<std::uint64_t, int>> order;
  std::map<std::pair<std::uint64_t, int>, const RunOutcome*> best;
  for (const auto& o : outcomes) {
    if (!o.ok()) continue;
    const auto slot = std::make_pair(o.spec.fold_seed, o.spec.fold_index);
    auto it = best.find(slot);
    if (it == best.end()) {
      best.emplace(slot, &o);
      order.push_back(slot);
    } else if (o.best_metric && (!it->second->best_metric || *o.best_metric > *it->second->best_metric)) {
      it->second = &o;
    }
  }
  for (const auto& slot : order) members.push_back(best.at(slot)->spec);
  return members;
}

Matrix mean_of(std::span<const Matrix> members) {
  require(!members.empty(), Errc::schema, "average of zero members");
  const auto rows = members.front().rows();
  const auto cols = members.front().cols();
  for (const auto& m : members)
    require(m.rows() == rows && m.cols() == cols, Errc::schema,
            "member shape " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + " differs from " +
                std::to_string(rows) + "x" + std::to_string(cols));
  Matrix out(rows, cols);
  std::vector<double> cell(members.size());
  const double n = static_cast<double>(members.size());
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (std::size_t i = 0; i < members.size(); ++i) cell[i] = members[i](r, c);
      std::sort(cell.begin(), cell.end());
      double offset = 0.0;
      for (const double v : cell) offset += v - cell.front();
      out(r, c) = cell.front() + offset / n;
    }
  return out;
}

EnsemblePrediction average_predictions(std::vector<Matrix> members, HeadKind head, double threshold, AverageMode mode) {
  EnsemblePrediction out;
  const Matrix mean = mean_of(members);
  out.averaged = mode == AverageMode::logits ? probabilities_from_logits(mean, head) : mean;
  out.decisions = decide_all(out.averaged, head, threshold);
  out.members = std::move(members);
  return out;
}

CrossValidationReport cross_validation_report(std::span<const RunOutcome> outcomes) {
  CrossValidationReport report;
  report.planned = outcomes.size();
  std::map<std::pair<double, std::size_t>, std::size_t> index;
  for (const auto& o : outcomes) {
    const auto slot = std::make_pair(o.spec.lr, o.spec.epochs);
    auto it = index.find(slot);
    if (it == index.end()) {
      it = index.emplace(slot, report.configs.size()).first;
      report.configs.push_back(ConfigSummary{o.spec.lr, o.spec.epochs, 0, {}, {}, {}});
    }
    auto& cfg = report.configs[it->second];
    ++cfg.planned;
    if (!o.ok() || !o.best_metric) {
      ++report.failed;
      continue;
    }
    cfg.fold_metrics.push_back(*o.best_metric);
  }
  report.partial = report.failed > 0;
  for (auto& cfg : report.configs) {
    const auto n = cfg.fold_metrics.size();
    if (n == 0) continue;
    double sum = 0.0;
    for (double m : cfg.fold_metrics) sum += m;
    cfg.mean = sum / static_cast<double>(n);
    if (n >= 2) {
      double ss = 0.0;
      for (double m : cfg.fold_metrics) ss += (m - *cfg.mean) * (m - *cfg.mean);
      cfg.stddev = std::sqrt(ss / static_cast<double>(n - 1));
    }
  }
  return report;
}

ojson CrossValidationReport::to_json() const {
  ojson j;
  j["planned"] = planned;
  j["failed"] = failed;
  j["partial"] = partial;
  ojson list = ojson::array();
  for (const auto& c : configs) {
    ojson e;
    e["lr"] = c.lr;
    e["epochs"] = c.epochs;
    e["planned"] = c.planned;
    e["completed"] = c.fold_metrics.size();
    e["fold_metrics"] = c.fold_metrics;
    e["mean"] = c.mean ? ojson(*c.mean) : ojson();
    e["stddev"] = c.stddev ? ojson(*c.stddev) : ojson();
    list.push_back(e);
  }
  j["configs"] = list;
  return j;
}

}  // namespace ironbench
