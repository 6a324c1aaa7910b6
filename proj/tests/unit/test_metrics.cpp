#include <doctest.h>

#include <algorithm>
#include <random>

#include "ironbench/error.hpp"
#include "ironbench/metrics.hpp"
#include "oracles/oracle_values.hpp"

using namespace ironbench;

namespace {

// Direct counting, independent of confusion()/prf1().
struct Brute {
  double precision, recall, f1, accuracy;
};

Brute brute(const std::vector<int>& p, const std::vector<int>& g) {
  double tp = 0, pred_pos = 0, gold_pos = 0, agree = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    tp += (p[i] == 1 && g[i] == 1) ? 1 : 0;
    pred_pos += p[i] == 1 ? 1 : 0;
    gold_pos += g[i] == 1 ? 1 : 0;
    agree += p[i] == g[i] ? 1 : 0;
  }
  Brute b{};
  b.precision = pred_pos > 0 ? tp / pred_pos : 0.0;
  b.recall = gold_pos > 0 ? tp / gold_pos : 0.0;
  b.f1 = b.precision + b.recall > 0 ? 2 * b.precision * b.recall / (b.precision + b.recall) : 0.0;
  b.accuracy = p.empty() ? 0.0 : agree / static_cast<double>(p.size());
  return b;
}

std::vector<int> random_bits(std::mt19937_64& rng, std::size_t n, double p_one) {
  std::bernoulli_distribution coin(p_one);
  std::vector<int> v(n);
  for (auto& x : v) x = coin(rng) ? 1 : 0;
  return v;
}

Sample labelled(int label) {
  Sample s;
  s.target.label = label;
  return s;
}

}  // namespace

TEST_CASE("hand-derived confusion case") {
  const ConfusionCounts c{2, 1, 3, 2};
  const auto m = prf1(c);
  CHECK(m.f1 == oracle::kF1_2132);
  CHECK(m.precision == oracle::kPrecision2132);
  CHECK(m.recall == oracle::kRecall2132);
  CHECK(m.accuracy == oracle::kAccuracy2132);

  const std::vector<int> preds = {1, 1, 0, 0, 0, 0, 0, 0};
  const std::vector<int> golds = {1, 0, 1, 1, 0, 0, 0, 0};
  const auto counts = confusion(preds, golds);
  CHECK(counts == ConfusionCounts{oracle::kConfusionHand[0], oracle::kConfusionHand[1], oracle::kConfusionHand[2],
                                  oracle::kConfusionHand[3]});
  CHECK(task_c_score(std::vector<int>{0, 1, 1, 1}, std::vector<int>{0, 1, 0, 1}) == oracle::kTaskCHand);
}

TEST_CASE("prf1 matches a brute-force counting oracle") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = rng() % 60;
    const double rate = static_cast<double>(rng() % 100) / 100.0;
    const auto p = random_bits(rng, n, rate);
    const auto g = random_bits(rng, n, 1.0 - rate);
    const auto m = prf1(confusion(p, g));
    const auto b = brute(p, g);
    CHECK(std::abs(m.precision - b.precision) <= 1e-12);
    CHECK(std::abs(m.recall - b.recall) <= 1e-12);
    CHECK(std::abs(m.f1 - b.f1) <= 1e-12);
    CHECK(std::abs(m.accuracy - b.accuracy) <= 1e-12);
    CHECK(task_a_score(p, g) == m.f1);
  }
}

TEST_CASE("macro F1 matches a brute-force oracle") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = rng() % 40;
    std::vector<Sublabels> p(n), g(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < 6; ++j) {
        p[i][j] = static_cast<std::uint8_t>(rng() % 3 == 0);
        g[i][j] = static_cast<std::uint8_t>(rng() % 4 == 0);
      }
    double sum = 0.0;
    std::vector<int> pn, gn;
    for (std::size_t j = 0; j < 6; ++j) {
      std::vector<int> pc, gc;
      for (std::size_t i = 0; i < n; ++i) {
        pc.push_back(p[i][j]);
        gc.push_back(g[i][j]);
      }
      sum += brute(pc, gc).f1;
    }
    for (std::size_t i = 0; i < n; ++i) {
      pn.push_back(std::count(p[i].begin(), p[i].end(), 1) == 0);
      gn.push_back(std::count(g[i].begin(), g[i].end(), 1) == 0);
    }
    CHECK(std::abs(task_b_score(p, g) - sum / 6.0) <= 1e-12);
    CHECK(std::abs(task_b_score(p, g, MacroVariant::with_none) - (sum + brute(pn, gn).f1) / 7.0) <= 1e-12);
  }
}

TEST_CASE("zero-division convention") {
  const auto empty = prf1(ConfusionCounts{});
  CHECK(empty.f1 == 0.0);
  CHECK(empty.precision == 0.0);
  CHECK(prf1(ConfusionCounts{0, 0, 5, 0}).f1 == 0.0);
  CHECK(prf1(ConfusionCounts{0, 3, 0, 2}).f1 == 0.0);
  // One label right, five columns never positive anywhere.
  const std::vector<Sublabels> p = {{1, 0, 0, 0, 0, 0}};
  CHECK(task_b_score(p, p) == oracle::kMacroOneOfSix);
}

TEST_CASE("accuracy is invariant to example order and macro F1 to column order") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 30;
    auto p = random_bits(rng, n, 0.5);
    auto g = random_bits(rng, n, 0.4);
    const double before = task_c_score(p, g);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> ps, gs;
    for (auto i : order) {
      ps.push_back(p[i]);
      gs.push_back(g[i]);
    }
    CHECK(task_c_score(ps, gs) == before);

    std::vector<Sublabels> mp(n), mg(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < 6; ++j) {
        mp[i][j] = static_cast<std::uint8_t>(rng() % 2);
        mg[i][j] = static_cast<std::uint8_t>(rng() % 2);
      }
    std::array<std::size_t, 6> cols = {0, 1, 2, 3, 4, 5};
    std::shuffle(cols.begin(), cols.end(), rng);
    auto mp2 = mp, mg2 = mg;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < 6; ++j) {
        mp2[i][j] = mp[i][cols[j]];
        mg2[i][j] = mg[i][cols[j]];
      }
    CHECK(std::abs(task_b_score(mp2, mg2) - task_b_score(mp, mg)) <= 1e-15);
  }
}

TEST_CASE("length mismatch is a schema error") {
  try {
    confusion(std::vector<int>{1}, std::vector<int>{1, 0});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::schema);
  }
}

TEST_CASE("reports use the official metric of each task") {
  std::vector<Sample> golds = {labelled(1), labelled(0), labelled(1), labelled(0)};
  std::vector<Decision> d(4);
  d[0].label = 1;
  d[1].label = 1;
  const auto a = score_decisions(TaskKind::task_a, d, golds);
  CHECK(a.score == a.f1);
  CHECK(a.counts == ConfusionCounts{1, 1, 1, 1});
  const auto c = score_decisions(TaskKind::task_c, d, golds, "en");
  CHECK(c.score == 0.5);
  CHECK(c.language == "en");

  std::vector<Sample> multi(2);
  multi[0].target.labels = {1, 1, 0, 0, 0, 0};
  std::vector<Decision> md(2);
  md[0].labels = {1, 0, 0, 0, 0, 0};
  const auto b = score_decisions(TaskKind::task_b, md, multi);
  CHECK(b.macro_f1);
  CHECK(b.macro_f1_with_none);
  CHECK(b.score == *b.macro_f1);
  CHECK((*b.per_label_f1)[0] == 1.0);
  CHECK(score_decisions(TaskKind::task_b, md, multi, "all", MacroVariant::with_none).score == *b.macro_f1_with_none);

  Matrix probs(4, 2);
  probs << 0.2, 0.8, 0.3, 0.7, 0.9, 0.1, 0.5, 0.5;
  CHECK(official_metric(TaskKind::task_a, probs, golds) == a.score);
}
