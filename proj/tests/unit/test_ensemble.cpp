#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "ironbench/error.hpp"
#include "ironbench/ensemble.hpp"
#include "ironbench/seed.hpp"
#include "oracles/oracle_values.hpp"
#include "support/scratch.hpp"
#include "support/synthetic.hpp"

using namespace ironbench;

namespace {

Matrix random_probs(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, bool softmax_rows) {
  std::normal_distribution<double> normal(0.0, 3.0);
  Matrix logits(rows, cols);
  for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = normal(rng);
  return probabilities_from_logits(logits, softmax_rows ? HeadKind::binary : HeadKind::multilabel6);
}

ModelConfig tiny() {
  ModelConfig c;
  c.d_model = 8;
  c.n_layers = 1;
  c.n_heads = 2;
  c.d_ff = 16;
  c.max_seq_len = 64;
  return c;
}

RunOutcome outcome(std::uint64_t seed, int fold, double lr, std::optional<double> metric,
                   RunStatus status = RunStatus::trained) {
  RunOutcome o;
  o.spec.fold_seed = seed;
  o.spec.fold_index = fold;
  o.spec.lr = lr;
  o.spec.epochs = 5;
  o.best_metric = metric;
  o.status = status;
  return o;
}

}  // namespace

TEST_CASE("seed derivation and the generator match the reference") {
  std::mt19937_64 rng(5489);
  for (auto expected : oracle::kMt64Seed5489) CHECK(rng() == expected);
  for (std::uint64_t s = 1; s <= 4; ++s) CHECK(derive_seed(42, s) == oracle::kDeriveSeed42[s - 1]);
  RunSpec spec;
  spec.fold_seed = 42;
  spec.fold_index = 3;
  CHECK(run_seed(spec) == derive_seed(42, 3));
  TrainConfig base;
  spec.lr = 5e-4;
  spec.epochs = 7;
  const auto c = run_train_config(spec, base);
  CHECK(c.peak_lr == 5e-4);
  CHECK(c.epochs == 7);
  CHECK(c.seed == run_seed(spec));
}

TEST_CASE("run plan covers the grid in a fixed order with distinct keys") {
  const std::vector<std::uint64_t> seeds = {42, 7};
  const Grid grid{{1e-5, 5e-6}, {20, 30}};
  const auto runs = plan_runs(10, seeds, grid, TaskKind::task_a, "data", "cfg");
  CHECK(runs.size() == 10 * 2 * 2 * 2);
  CHECK(runs[0].fold_index == 0);
  CHECK(runs[1].fold_index == 1);
  CHECK(runs[10].epochs == 30);
  CHECK(runs[20].lr == 5e-6);
  CHECK(runs[40].fold_seed == 7);
  std::set<std::string> keys;
  for (const auto& r : runs) keys.insert(r.key());
  CHECK(keys.size() == runs.size());

  const std::vector<std::uint64_t> dup = {1, 1};
  CHECK_THROWS_AS(plan_runs(2, dup, grid, TaskKind::task_a), Error);
  CHECK_THROWS_AS(plan_runs(1, seeds, grid, TaskKind::task_a), Error);
  CHECK_THROWS_AS(plan_runs(2, seeds, Grid{}, TaskKind::task_a), Error);
}

TEST_CASE("run keys are stable hashes of the spec") {
  RunSpec spec;
  spec.k = 5;
  spec.fold_index = 2;
  spec.fold_seed = 9;
  spec.lr = 1e-3;
  spec.epochs = 4;
  spec.dataset_id = "d";
  spec.config_id = "c";
  spec.task = TaskKind::task_c;
  const auto back = RunSpec::from_json(spec.to_json());
  CHECK(back == spec);
  CHECK(back.key() == spec.key());
  CHECK(spec.key().rfind("run-", 0) == 0);
  CHECK(spec.key().size() == 4 + 16);
  RunSpec other = spec;
  other.dataset_id = "e";
  CHECK(other.key() != spec.key());
  CHECK_THROWS_AS(RunSpec::from_json(ojson{{"k", 2}}), Error);
}

TEST_CASE("fingerprints react to the data and the settings") {
  const auto samples = make_text_samples(TaskKind::task_a, synthetic::texts(Language::en, 6, 1), 64);
  auto changed = samples;
  changed[2].target.label ^= 1;
  CHECK(dataset_fingerprint(samples) == dataset_fingerprint(samples));
  CHECK(dataset_fingerprint(samples) != dataset_fingerprint(changed));
  TrainConfig base;
  const auto id = config_fingerprint(tiny(), base, false, 0.5);
  TrainConfig other = base;
  other.peak_lr = 0.5;  // comes from the grid, not the fingerprint
  CHECK(config_fingerprint(tiny(), other, false, 0.5) == id);
  other.weight_decay = 0.2;
  CHECK(config_fingerprint(tiny(), other, false, 0.5) != id);
  CHECK(config_fingerprint(tiny(), base, true, 0.5) != id);
}

TEST_CASE("augmented pair orders share a fold") {
  std::vector<TextExample> rows;
  for (const auto& r : synthetic::texts(Language::en, 40, 2))
    if (r.rephrase) rows.push_back(r);
  const auto samples = make_pair_samples(build_pairs(rows, true, 3), 64);
  const auto plan = plan_folds(samples, 4, 11);
  for (std::size_t i = 0; i + 1 < samples.size(); i += 2)
    CHECK(plan.fold(samples[i].group) == plan.fold(samples[i + 1].group));
  const auto split = split_fold(samples, plan, 1);
  CHECK(split.train.size() + split.eval.size() == samples.size());
  std::set<std::string> train_groups;
  for (const auto& s : split.train) train_groups.insert(s.group);
  for (const auto& s : split.eval) CHECK(train_groups.count(s.group) == 0);
  CHECK_THROWS_AS(split_fold(samples, plan, 4), Error);
}

TEST_CASE("mean of identical members is exact") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix p = random_probs(rng, 7, trial % 2 ? 2 : 6, trial % 2 == 1);
    for (std::size_t m : {1u, 2u, 3u, 7u, 10u}) {
      const std::vector<Matrix> members(m, p);
      CHECK(mean_of(members) == p);
      const auto head = trial % 2 ? HeadKind::binary : HeadKind::multilabel6;
      const auto ens = average_predictions(members, head);
      const auto single = decide_all(p, head);
      for (std::size_t i = 0; i < single.size(); ++i) {
        CHECK(ens.decisions[i].label == single[i].label);
        CHECK(ens.decisions[i].labels == single[i].labels);
      }
    }
  }
}

TEST_CASE("averaged probabilities stay valid and ignore member order") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const bool softmax_rows = trial % 2 == 0;
    std::vector<Matrix> members;
    const std::size_t m = 2 + rng() % 8;
    for (std::size_t i = 0; i < m; ++i) members.push_back(random_probs(rng, 9, softmax_rows ? 2 : 6, softmax_rows));
    const Matrix mean = mean_of(members);
    if (softmax_rows)
      for (Eigen::Index r = 0; r < mean.rows(); ++r) CHECK(std::abs(mean.row(r).sum() - 1.0) <= 1e-9);
    CHECK(mean.minCoeff() >= 0.0);
    CHECK(mean.maxCoeff() <= 1.0);
    auto shuffled = members;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(mean_of(shuffled) == mean);
    const auto head = softmax_rows ? HeadKind::binary : HeadKind::multilabel6;
    const auto a = average_predictions(members, head);
    const auto b = average_predictions(shuffled, head);
    for (std::size_t i = 0; i < a.decisions.size(); ++i) {
      CHECK(a.decisions[i].label == b.decisions[i].label);
      CHECK(a.decisions[i].labels == b.decisions[i].labels);
    }
  }
}

TEST_CASE("two-member average matches the derived values") {
  Matrix a(1, 2), b(1, 2);
  a << 0.9, 0.1;
  b << 0.2, 0.8;
  const std::vector<Matrix> members = {a, b};
  const auto ens = average_predictions(members, HeadKind::binary);
  CHECK(ens.averaged(0, 0) == doctest::Approx(oracle::kMeanTwoMembers[0]).epsilon(1e-15));
  CHECK(ens.averaged(0, 1) == doctest::Approx(oracle::kMeanTwoMembers[1]).epsilon(1e-15));
  CHECK(ens.decisions[0].label == 0);

  Matrix wrong(2, 2);
  wrong.setZero();
  const std::vector<Matrix> mixed = {a, wrong};
  CHECK_THROWS_AS(mean_of(mixed), Error);
}

TEST_CASE("logit averaging goes through the head activation") {
  Matrix a(1, 2), b(1, 2);
  a << 2.0, 0.0;
  b << 0.0, 1.0;
  const std::vector<Matrix> members = {a, b};
  const auto ens = average_predictions(members, HeadKind::binary, 0.5, AverageMode::logits);
  Matrix mean(1, 2);
  mean << 1.0, 0.5;
  CHECK((ens.averaged - probabilities_from_logits(mean, HeadKind::binary)).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("member selection") {
  const std::vector<RunOutcome> outcomes = {outcome(1, 0, 1e-3, 0.5),  outcome(1, 1, 1e-3, 0.7),
                                            outcome(1, 0, 5e-4, 0.6),  outcome(1, 1, 5e-4, 0.7),
                                            outcome(1, 0, 1e-4, 0.9, RunStatus::failed)};
  CHECK(select_members(outcomes, false).size() == 4);
  const auto best = select_members(outcomes, true);
  REQUIRE(best.size() == 2);
  CHECK(best[0].lr == 5e-4);
  CHECK(best[1].lr == 1e-3);  // tie keeps the earlier run
}

TEST_CASE("cross-validation summary") {
  const std::vector<RunOutcome> outcomes = {outcome(1, 0, 1e-3, 0.8), outcome(1, 1, 1e-3, 0.6),
                                            outcome(1, 0, 5e-4, 0.5), outcome(1, 1, 5e-4, std::nullopt, RunStatus::failed)};
  const auto report = cross_validation_report(outcomes);
  REQUIRE(report.configs.size() == 2);
  CHECK(*report.configs[0].mean == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(*report.configs[0].stddev == doctest::Approx(oracle::kStddev08_06).epsilon(1e-14));
  CHECK(!report.configs[1].stddev);
  CHECK(report.failed == 1);
  CHECK(report.partial);
  const auto j = report.to_json();
  CHECK(j["configs"][1]["stddev"].is_null());
  CHECK(j["planned"] == 4);
}

TEST_CASE("registry commits atomically and cached runs are reused") {
  scratch::Dir dir("registry");
  const Registry registry(dir / "registry");
  const auto samples = make_text_samples(TaskKind::task_a, synthetic::texts(Language::en, 12, 3), 64);
  TrainConfig base;
  base.epochs = 2;
  const std::vector<std::uint64_t> seeds = {5};
  auto runs = plan_runs(2, seeds, Grid{{1e-3}, {2}}, TaskKind::task_a, dataset_fingerprint(samples), "cfg");
  RunSpec broken = runs[0];
  broken.fold_index = 5;
  runs.push_back(broken);

  // Leftover of an interrupted run.
  std::filesystem::create_directories(registry.run_dir(runs[0].key()));
  scratch::write(registry.run_dir(runs[0].key()) / "spec.json", "{}");

  std::size_t callbacks = 0;
  ExecuteOptions options;
  options.on_done = [&](const RunOutcome&) { ++callbacks; };
  const auto first = execute_runs(runs, samples, tiny(), base, registry, options);
  CHECK(callbacks == 3);
  CHECK(first[0].status == RunStatus::trained);
  CHECK(first[1].status == RunStatus::trained);
  CHECK(first[2].status == RunStatus::failed);
  CHECK(!first[2].error.empty());
  CHECK(registry.completed_keys().size() == 2);
  for (const char* file : {"spec.json", "checkpoint.bin", "log.jsonl", "eval.json"})
    CHECK(std::filesystem::exists(registry.run_dir(runs[0].key()) / file));
  CHECK(registry.load_spec(runs[1].key()) == runs[1]);
  const auto eval = registry.load_eval(runs[0].key());
  CHECK(eval["train_examples"].get<int>() + eval["eval_examples"].get<int>() == 12);
  CHECK(eval["best_metric"].get<double>() == *first[0].best_metric);

  const auto second = execute_runs(std::span<const RunSpec>(runs).first(2), samples, tiny(), base, registry);
  CHECK(second[0].status == RunStatus::cached);
  CHECK(second[1].best_metric == first[1].best_metric);
  const auto listed = registry_outcomes(runs, registry);
  CHECK(listed[2].status == RunStatus::failed);
  CHECK(listed[0].ok());

  // Parallel execution trains the same models.
  const Registry parallel(dir / "parallel");
  ExecuteOptions two;
  two.jobs = 2;
  execute_runs(std::span<const RunSpec>(runs).first(2), samples, tiny(), base, parallel, two);
  for (int i = 0; i < 2; ++i)
    CHECK(parallel.load_model(runs[i].key()).params.bitwise_equal(registry.load_model(runs[i].key()).params));
}
