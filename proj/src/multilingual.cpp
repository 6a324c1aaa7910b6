#include "ironbench/multilingual.hpp"

#include <algorithm>
#include <random>

#include "ironbench/error.hpp"

namespace ironbench {

std::size_t JointDataset::count(Language language) const {
  if (task == TaskKind::task_c)
    return static_cast<std::size_t>(
        std::count_if(pairs.begin(), pairs.end(), [&](const PairExample& p) { return p.language == language; }));
  return static_cast<std::size_t>(
      std::count_if(texts.begin(), texts.end(), [&](const TextExample& t) { return t.language == language; }));
}

JointDataset merge_bilingual(const JointDataset& en, const JointDataset& ar, std::uint64_t seed) {
  require(en.task == ar.task, Errc::schema,
          "cannot merge " + std::string(to_string(en.task)) + " with " + std::string(to_string(ar.task)));
  JointDataset out;
  out.task = en.task;
  std::mt19937_64 rng(seed);
  // Task C may arrive as texts that still need pairing, so both lists are carried.
  out.texts = en.texts;
  out.texts.insert(out.texts.end(), ar.texts.begin(), ar.texts.end());
  std::shuffle(out.texts.begin(), out.texts.end(), rng);
  out.pairs = en.pairs;
  out.pairs.insert(out.pairs.end(), ar.pairs.begin(), ar.pairs.end());
  std::shuffle(out.pairs.begin(), out.pairs.end(), rng);
  return out;
}

LanguageReports reports_by_language(TaskKind task, std::span<const Decision> decisions,
                                    std::span<const Sample> samples, std::span<const Language> expected,
                                    MacroVariant variant) {
  require(decisions.size() == samples.size(), Errc::schema, "decision count differs from sample count");
  LanguageReports out;
  out.pooled = score_decisions(task, decisions, samples, "all", variant);
  for (const Language lang : {Language::en, Language::ar}) {
    std::vector<Decision> d;
    std::vector<Sample> s;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (samples[i].language != lang) continue;
      d.push_back(decisions[i]);
      s.push_back(samples[i]);
    }
    if (s.empty()) {
      if (std::find(expected.begin(), expected.end(), lang) != expected.end())
        warn("no " + std::string(to_string(lang)) + " examples in the eval set; language omitted");
      continue;
    }
    out.per_language.emplace(std::string(to_string(lang)), score_decisions(task, d, s, std::string(to_string(lang)), variant));
  }
  return out;
}

LanguageReports eval_per_language(const Model& model, TaskKind task, std::span<const Sample> samples,
                                  double threshold, std::span<const Language> expected, MacroVariant variant) {
  require(!samples.empty(), Errc::empty_batch, "eval set is empty");
  const auto decisions = decide_all(predict_proba(model, samples), model.head, threshold);
  return reports_by_language(task, decisions, samples, expected, variant);
}

}  // namespace ironbench
