#include <doctest.h>

#include <algorithm>

#include "ironbench/error.hpp"
#include "ironbench/multilingual.hpp"
#include "support/synthetic.hpp"

using namespace ironbench;

namespace {

JointDataset texts_of(Language lang, std::size_t n, std::uint64_t seed) {
  JointDataset d;
  d.task = TaskKind::task_a;
  d.texts = synthetic::texts(lang, n, seed);
  return d;
}

ModelConfig tiny() {
  ModelConfig c;
  c.d_model = 8;
  c.n_layers = 1;
  c.n_heads = 2;
  c.d_ff = 16;
  c.max_seq_len = 96;
  return c;
}

std::vector<std::string> sorted_texts(const std::vector<TextExample>& rows) {
  std::vector<std::string> out;
  for (const auto& r : rows) out.push_back(r.id + "|" + r.text);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("merging keeps every example exactly once") {
  const auto en = texts_of(Language::en, 30, 1);
  const auto ar = texts_of(Language::ar, 20, 2);
  const auto merged = merge_bilingual(en, ar, 7);
  CHECK(merged.size() == 50);
  CHECK(merged.count(Language::en) == 30);
  CHECK(merged.count(Language::ar) == 20);
  auto both = en.texts;
  both.insert(both.end(), ar.texts.begin(), ar.texts.end());
  CHECK(sorted_texts(merged.texts) == sorted_texts(both));
  for (const auto& ex : merged.texts) CHECK(std::find(both.begin(), both.end(), ex) != both.end());

  // Languages are interleaved rather than appended.
  const auto first_half_ar = std::count_if(merged.texts.begin(), merged.texts.begin() + 25,
                                           [](const TextExample& t) { return t.language == Language::ar; });
  CHECK(first_half_ar > 0);
  CHECK(first_half_ar < 20);
  CHECK(merge_bilingual(en, ar, 7).texts == merged.texts);
  CHECK(merge_bilingual(en, ar, 8).texts != merged.texts);
}

TEST_CASE("merging pairs and mismatched tasks") {
  JointDataset en, ar;
  en.task = ar.task = TaskKind::task_c;
  std::vector<TextExample> en_rows, ar_rows;
  for (const auto& r : synthetic::texts(Language::en, 10, 3))
    if (r.rephrase) en_rows.push_back(r);
  for (const auto& r : synthetic::texts(Language::ar, 10, 3))
    if (r.rephrase) ar_rows.push_back(r);
  en.pairs = build_pairs(en_rows, true, 1);
  ar.pairs = build_pairs(ar_rows, true, 1);
  const auto merged = merge_bilingual(en, ar, 2);
  CHECK(merged.size() == en.pairs.size() + ar.pairs.size());
  CHECK(merged.count(Language::ar) == ar.pairs.size());

  JointDataset other = texts_of(Language::ar, 4, 1);
  CHECK_THROWS_AS(merge_bilingual(en, other, 0), Error);
}

TEST_CASE("per-language scores equal scoring each language alone") {
  const auto merged = merge_bilingual(texts_of(Language::en, 12, 4), texts_of(Language::ar, 10, 5), 3);
  const auto samples = make_text_samples(TaskKind::task_a, merged.texts, 96);
  const Model model = make_model(tiny(), HeadKind::binary, 9);
  const std::vector<Language> expected = {Language::en, Language::ar};
  const auto pooled = eval_per_language(model, TaskKind::task_a, samples, 0.5, expected);
  REQUIRE(pooled.per_language.size() == 2);
  CHECK(pooled.pooled.examples == 22);
  for (const Language lang : expected) {
    std::vector<Sample> only;
    for (const auto& s : samples)
      if (s.language == lang) only.push_back(s);
    const auto alone = eval_per_language(model, TaskKind::task_a, only, 0.5);
    const auto& report = pooled.per_language.at(std::string(to_string(lang)));
    CHECK(report.examples == only.size());
    CHECK(report.score == alone.pooled.score);
    CHECK(report.counts == alone.pooled.counts);
  }
}

TEST_CASE("missing languages are left out of the report") {
  const auto samples = make_text_samples(TaskKind::task_a, synthetic::texts(Language::en, 6, 1), 96);
  std::vector<Decision> d(samples.size());
  const std::vector<Language> expected = {Language::en, Language::ar};
  const auto r = reports_by_language(TaskKind::task_a, d, samples, expected);
  CHECK(r.per_language.count("en") == 1);
  CHECK(r.per_language.count("ar") == 0);
  CHECK_THROWS_AS(reports_by_language(TaskKind::task_a, std::span<const Decision>(d).first(2), samples), Error);
}
