#pragma once

// Command implementations shared by the C API and the command-line tool.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ironbench/config_json.hpp"
#include "ironbench/ensemble.hpp"

namespace ironbench::app {

namespace fs = std::filesystem;

struct DataSection {
  std::map<std::string, fs::path> paths;  // language -> file
  DataFormat format = DataFormat::jsonl;
  std::vector<Language> languages = {Language::en};
  bool augment_pairs = true;
  bool stratify = false;
};

struct CvSection {
  int k = 10;
  std::vector<std::uint64_t> seeds = {42};
  AverageMode average = AverageMode::probabilities;
  bool best_per_fold = false;
  std::size_t jobs = 1;
};

struct TaskSection {
  TaskKind kind = TaskKind::task_a;
  HeadKind head = HeadKind::binary;
  MacroVariant macro_variant = MacroVariant::six_labels;
};

struct RunConfig {
  DataSection data;
  ModelConfig model;
  TrainConfig train;
  CvSection cv;
  Grid grid;  // empty lists fall back to train.peak_lr / train.epochs
  TaskSection task;
  fs::path output_dir = "runs";

  ojson to_json() const;
};

/// Parses a config document. Relative paths resolve against `base_dir`;
/// missing sections and keys take their defaults; unknown keys are errors.
RunConfig run_config_from_json(const ojson& doc, const fs::path& base_dir);

/// Reads `path`, applies IRONBENCH_RUN_DIR to output.dir, then `overrides`
/// ({"train.seed": 7, "data.languages": "en,ar", ...}) on top.
RunConfig load_run_config(const fs::path& path, const ojson& overrides = ojson::object());

/// Loads, merges and encodes the configured languages for the configured task.
std::vector<Sample> load_samples(const RunConfig& config);

ojson cmd_train(const RunConfig& config);

struct KfoldResult {
  ojson summary;
  bool partial = false;
};

KfoldResult cmd_kfold(const RunConfig& config);

struct PredictOptions {
  fs::path run_dir;
  fs::path test_path;
  std::optional<DataFormat> format;  // default: the run's data.format
  Language language = Language::en;
  std::string mode = "ensemble";      // or "single"
  std::optional<std::string> key;     // single mode: which registry run
  std::optional<bool> best_per_fold;  // default: the run's cv.best_per_fold
  std::optional<AverageMode> average;
  fs::path out_dir;  // default: <run_dir>/predictions
};

ojson cmd_predict(const PredictOptions& options);

struct EvaluateOptions {
  fs::path predictions;
  fs::path gold;
  std::optional<DataFormat> gold_format;
  Language language = Language::en;
  std::optional<TaskKind> task;
  MacroVariant macro_variant = MacroVariant::six_labels;
  double threshold = 0.5;
};

ojson cmd_evaluate(const EvaluateOptions& options);

ojson cmd_stats(const fs::path& path, DataFormat format, Language language, bool reference);

std::vector<std::int32_t> tokenize_line(const std::string& line, std::size_t max_seq_len, bool pair);

ojson cmd_gradcheck(const GradCheckOptions& options, const ModelConfig& config);

ojson predictions_line(const std::string& id, std::span<const double> probabilities, HeadKind head,
                       const Decision& decision);
std::string submission_text(TaskKind task, std::span<const Decision> decisions);

}  // namespace ironbench::app
