#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ironbench/config_json.hpp"
#include "ironbench/corpus.hpp"
#include "ironbench/optim.hpp"

namespace ironbench {

struct Grid {
  std::vector<double> lrs;
  std::vector<std::size_t> epochs;
};

// One member of the k-fold x grid ensemble.
struct RunSpec {
  int k = 2;
  int fold_index = 0;
  std::uint64_t fold_seed = 0;
  double lr = 1e-3;
  std::size_t epochs = 1;
  std::string dataset_id;  // fingerprint of the training samples
  std::string config_id;   // fingerprint of everything else that shapes the run
  TaskKind task = TaskKind::task_a;

  ojson to_json() const;
  static RunSpec from_json(const ojson& j);
  // Stable hash of the canonical JSON form.
  std::string key() const;
  bool operator==(const RunSpec&) const = default;
};

/// k x seeds x lrs x epochs runs, ordered seed, lr, epochs, fold.
std::vector<RunSpec> plan_runs(int k, std::span<const std::uint64_t> seeds, const Grid& grid, TaskKind task,
                               const std::string& dataset_id = {}, const std::string& config_id = {});

std::string dataset_fingerprint(std::span<const Sample> samples);
std::string config_fingerprint(const ModelConfig& model, const TrainConfig& base, bool stratify, double threshold,
                               MacroVariant variant = MacroVariant::six_labels);

// Seed of one run: every stream (init, shuffle, dropout) derives from it.
std::uint64_t run_seed(const RunSpec& spec) noexcept;
TrainConfig run_train_config(const RunSpec& spec, const TrainConfig& base);

/// Folds over sample groups, so both orders of an augmented pair land in the
/// same fold. Stratifies on the label of each group's first sample.
FoldPlan plan_folds(std::span<const Sample> samples, int k, std::uint64_t seed, bool stratify = false);

struct FoldSplit {
  std::vector<Sample> train;
  std::vector<Sample> eval;
};

FoldSplit split_fold(std::span<const Sample> samples, const FoldPlan& plan, int fold_index);

// <root>/<key>/{spec.json, checkpoint.bin, log.jsonl, eval.json}. A run is
// committed by renaming a finished temporary directory into place.
class Registry {
 public:
  explicit Registry(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }
  std::filesystem::path run_dir(const std::string& key) const { return root_ / key; }
  bool completed(const std::string& key) const;
  std::vector<std::string> completed_keys() const;  // sorted
  Model load_model(const std::string& key) const;
  ojson load_eval(const std::string& key) const;
  RunSpec load_spec(const std::string& key) const;
  void commit(const RunSpec& spec, const Model& model, std::span<const EpochLog> log, const ojson& eval) const;

 private:
  std::filesystem::path root_;
};

enum class RunStatus { trained, cached, failed };
std::string_view to_string(RunStatus status) noexcept;

struct RunOutcome {
  RunSpec spec;
  RunStatus status = RunStatus::failed;
  std::string error;
  std::optional<double> best_metric;
  std::size_t best_epoch = 0;

  bool ok() const noexcept { return status != RunStatus::failed; }
};

struct ExecuteOptions {
  std::size_t jobs = 1;
  bool stratify = false;
  double threshold = 0.5;
  MacroVariant variant = MacroVariant::six_labels;
  std::function<void(const RunOutcome&)> on_done;  // called under a lock
};

/// Trains every run not already in the registry. A failed run is recorded and
/// the rest continue. Outcomes come back in plan order.
std::vector<RunOutcome> execute_runs(std::span<const RunSpec> runs, std::span<const Sample> samples,
                                     const ModelConfig& model_config, const TrainConfig& base, const Registry& registry,
                                     const ExecuteOptions& options = {});

/// The outcome of each planned run as recorded in the registry; runs that are
/// not there come back failed.
std::vector<RunOutcome> registry_outcomes(std::span<const RunSpec> runs, const Registry& registry);

/// Successful runs, or only the best of each (seed, fold) with ties going to
/// the earlier run in plan order.
std::vector<RunSpec> select_members(std::span<const RunOutcome> outcomes, bool best_per_fold);

/// Elementwise mean. Each cell is summed from its smallest value upward as
/// offsets, so the result does not depend on member order and m copies of a
/// matrix average to that matrix exactly.
Matrix mean_of(std::span<const Matrix> members);

enum class AverageMode { probabilities, logits };

struct EnsemblePrediction {
  std::vector<Matrix> members;
  Matrix averaged;  // probabilities
  std::vector<Decision> decisions;
};

/// `members` are probability matrices, or logits in AverageMode::logits where
/// the mean logits go through the head's activation.
EnsemblePrediction average_predictions(std::vector<Matrix> members, HeadKind head, double threshold = 0.5,
                                       AverageMode mode = AverageMode::probabilities);

struct ConfigSummary {
  double lr = 0.0;
  std::size_t epochs = 0;
  std::size_t planned = 0;
  std::vector<double> fold_metrics;
  std::optional<double> mean;
  std::optional<double> stddev;  // sample standard deviation; null below two folds
};

struct CrossValidationReport {
  std::vector<ConfigSummary> configs;
  std::size_t planned = 0;
  std::size_t failed = 0;
  bool partial = false;

  ojson to_json() const;
};

CrossValidationReport cross_validation_report(std::span<const RunOutcome> outcomes);

}  // namespace ironbench
