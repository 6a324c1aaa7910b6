#include "ironbench/metrics.hpp"

#include <vector>

#include "ironbench/error.hpp"

namespace ironbench {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) fail(Errc::schema, "prediction/gold length mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
}

std::vector<int> column(std::span<const Sublabels> rows, std::size_t j) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[j]);
  return out;
}

std::vector<int> none_column(std::span<const Sublabels> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    int any = 0;
    for (auto b : r) any |= b;
    out.push_back(any ? 0 : 1);
  }
  return out;
}

}  // namespace

ConfusionCounts confusion(std::span<const int> preds, std::span<const int> golds, int positive_class) {
  check_lengths(preds.size(), golds.size());
  ConfusionCounts c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == positive_class;
    const bool g = golds[i] == positive_class;
    if (p && g) ++c.tp;
    else if (p) ++c.fp;
    else if (g) ++c.fn;
    else ++c.tn;
  }
  return c;
}

Prf1 prf1(const ConfusionCounts& c) {
  Prf1 m;
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  // Harmonic mean of precision and recall, written over the counts so it is
  // rounded once.
  m.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  return m;
}

double task_a_score(std::span<const int> preds, std::span<const int> golds) {
  return prf1(confusion(preds, golds, 1)).f1;
}

std::array<double, kNumSublabels> task_b_per_label_f1(std::span<const Sublabels> preds,
                                                      std::span<const Sublabels> golds) {
  check_lengths(preds.size(), golds.size());
  std::array<double, kNumSublabels> out{};
  for (std::size_t j = 0; j < kNumSublabels; ++j) out[j] = prf1(confusion(column(preds, j), column(golds, j), 1)).f1;
  return out;
}

double task_b_score(std::span<const Sublabels> preds, std::span<const Sublabels> golds, MacroVariant variant) {
  const auto per_label = task_b_per_label_f1(preds, golds);
  double sum = 0.0;
  for (double f : per_label) sum += f;
  if (variant == MacroVariant::six_labels) return sum / static_cast<double>(kNumSublabels);
  sum += prf1(confusion(none_column(preds), none_column(golds), 1)).f1;
  return sum / static_cast<double>(kNumSublabels + 1);
}

double task_c_score(std::span<const int> preds, std::span<const int> golds) {
  check_lengths(preds.size(), golds.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == golds[i] ? 1 : 0;
  return ratio(hits, preds.size());
}

MetricsReport score_decisions(TaskKind task, std::span<const Decision> decisions, std::span<const Sample> golds,
                              std::string language, MacroVariant variant) {
  check_lengths(decisions.size(), golds.size());
  MetricsReport r;
  r.task = task;
  r.language = std::move(language);
  r.examples = golds.size();
  if (task == TaskKind::task_b) {
    std::vector<Sublabels> p, g;
    for (std::size_t i = 0; i < golds.size(); ++i) {
      p.push_back(decisions[i].labels);
      g.push_back(golds[i].target.labels);
    }
    for (std::size_t j = 0; j < kNumSublabels; ++j) {
      const auto c = confusion(column(p, j), column(g, j), 1);
      r.counts.tp += c.tp, r.counts.fp += c.fp, r.counts.tn += c.tn, r.counts.fn += c.fn;
    }
    r.per_label_f1 = task_b_per_label_f1(p, g);
    r.macro_f1 = task_b_score(p, g, MacroVariant::six_labels);
    r.macro_f1_with_none = task_b_score(p, g, MacroVariant::with_none);
    r.score = variant == MacroVariant::with_none ? *r.macro_f1_with_none : *r.macro_f1;
  } else {
    std::vector<int> p, g;
    for (std::size_t i = 0; i < golds.size(); ++i) {
      p.push_back(decisions[i].label);
      g.push_back(golds[i].target.label);
    }
    r.counts = confusion(p, g, 1);
    r.score = task == TaskKind::task_a ? task_a_score(p, g) : task_c_score(p, g);
  }
  const auto m = prf1(r.counts);
  r.accuracy = m.accuracy;
  r.precision = m.precision;
  r.recall = m.recall;
  r.f1 = m.f1;
  if (task == TaskKind::task_b) {
    // Exact-match accuracy over the six-label rows.
    std::size_t exact = 0;
    for (std::size_t i = 0; i < golds.size(); ++i) exact += decisions[i].labels == golds[i].target.labels ? 1 : 0;
    r.accuracy = ratio(exact, golds.size());
  }
  return r;
}

double official_metric(TaskKind task, const Matrix& probabilities, std::span<const Sample> golds, double threshold,
                       MacroVariant variant) {
  const auto decisions = decide_all(probabilities, head_for(task), threshold);
  return score_decisions(task, decisions, golds, "all", variant).score;
}

}  // namespace ironbench
