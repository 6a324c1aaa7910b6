#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ironbench/corpus.hpp"
#include "ironbench/metrics.hpp"
#include "ironbench/taskheads.hpp"

namespace ironbench {

// One task's examples from any mix of languages. Text tasks fill `texts`,
// task C fills `pairs`, or `texts` when the pairs are still to be built.
struct JointDataset {
  TaskKind task = TaskKind::task_a;
  std::vector<TextExample> texts;
  std::vector<PairExample> pairs;

  std::size_t size() const noexcept { return task == TaskKind::task_c ? pairs.size() : texts.size(); }
  std::size_t count(Language language) const;
};

/// Concatenates both sides and shuffles the union with `seed`, so any
/// micro-batch may mix languages.
JointDataset merge_bilingual(const JointDataset& en, const JointDataset& ar, std::uint64_t seed);

struct LanguageReports {
  std::map<std::string, MetricsReport> per_language;
  MetricsReport pooled;
};

/// Splits already computed decisions by the language of each sample.
/// Languages with no samples are left out (with a warning when listed in
/// `expected`).
LanguageReports reports_by_language(TaskKind task, std::span<const Decision> decisions,
                                    std::span<const Sample> samples,
                                    std::span<const Language> expected = {},
                                    MacroVariant variant = MacroVariant::six_labels);

/// Predicts every sample once and scores each language separately plus pooled.
LanguageReports eval_per_language(const Model& model, TaskKind task, std::span<const Sample> samples,
                                  double threshold = 0.5, std::span<const Language> expected = {},
                                  MacroVariant variant = MacroVariant::six_labels);

}  // namespace ironbench
