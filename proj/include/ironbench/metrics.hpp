#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "ironbench/corpus.hpp"
#include "ironbench/taskheads.hpp"

namespace ironbench {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

struct Prf1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
};

ConfusionCounts confusion(std::span<const int> preds, std::span<const int> golds, int positive_class = 1);

/// Accuracy, precision, recall and F1; every 0/0 is taken as 0.
Prf1 prf1(const ConfusionCounts& counts);

double task_a_score(std::span<const int> preds, std::span<const int> golds);

enum class MacroVariant { six_labels, with_none };

/// Unweighted mean of per-label F1. `with_none` adds a seventh column that is
/// 1 when a row carries no sublabel.
double task_b_score(std::span<const Sublabels> preds, std::span<const Sublabels> golds,
                    MacroVariant variant = MacroVariant::six_labels);
std::array<double, kNumSublabels> task_b_per_label_f1(std::span<const Sublabels> preds,
                                                      std::span<const Sublabels> golds);

double task_c_score(std::span<const int> preds, std::span<const int> golds);

struct MetricsReport {
  TaskKind task = TaskKind::task_a;
  std::string language;  // "en", "ar" or "all"
  std::size_t examples = 0;
  ConfusionCounts counts;  // binary tasks; micro-summed over labels for task B
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<std::array<double, kNumSublabels>> per_label_f1;
  std::optional<double> macro_f1;
  std::optional<double> macro_f1_with_none;
  double score = 0.0;  // the task's official metric
};

/// Scores decisions against labelled samples (sample order = decision order).
/// For task B `variant` picks which macro-F1 becomes the score.
MetricsReport score_decisions(TaskKind task, std::span<const Decision> decisions, std::span<const Sample> golds,
                              std::string language = "all", MacroVariant variant = MacroVariant::six_labels);

/// The official metric of `task` computed from probabilities.
double official_metric(TaskKind task, const Matrix& probabilities, std::span<const Sample> golds,
                       double threshold = 0.5, MacroVariant variant = MacroVariant::six_labels);

}  // namespace ironbench
