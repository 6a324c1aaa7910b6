#include <doctest.h>

#include <functional>
#include <sstream>

#include "ironbench/error.hpp"
#include "ironbench/app.hpp"
#include "support/workspace.hpp"

using namespace ironbench;
namespace app = ironbench::app;
namespace fs = std::filesystem;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an ironbench::Error");
  return Errc::io;
}

std::vector<ojson> jsonl(const fs::path& path) {
  std::vector<ojson> out;
  std::stringstream ss(scratch::read(path));
  for (std::string line; std::getline(ss, line);)
    if (!line.empty()) out.push_back(ojson::parse(line));
  return out;
}

std::size_t line_count(const fs::path& path) { return jsonl(path).size(); }

}  // namespace

TEST_CASE("train writes its artifacts and predict/evaluate agree") {
  workspace::Workspace ws("app-train");
  const auto config = app::load_run_config(ws.config(workspace::tiny_config("task_a", 3)));
  const auto summary = app::cmd_train(config);
  const fs::path out = config.output_dir;
  for (const char* f : {"config.json", "log.jsonl", "checkpoint.bin", "eval.json"}) CHECK(fs::exists(out / f));
  CHECK(line_count(out / "log.jsonl") == 3);
  CHECK(summary["total_steps"].get<std::size_t>() > 0);
  const auto eval = ojson::parse(scratch::read(out / "eval.json"));
  CHECK(eval["metric"] == "f1_sarcastic");
  CHECK(eval["per_language"].contains("en"));
  CHECK(eval["per_language"].contains("ar"));

  app::PredictOptions p;
  p.run_dir = out;
  p.test_path = ws / "test.en.jsonl";
  const auto predicted = app::cmd_predict(p);
  CHECK(predicted["members"] == ojson::array({"checkpoint"}));
  CHECK(predicted["examples"] == 8);
  const auto lines = jsonl(out / "predictions" / "predictions.jsonl");
  REQUIRE(lines.size() == 8);
  for (const auto& l : lines) {
    const auto probs = l["probabilities"].get<std::vector<double>>();
    CHECK(probs.size() == 2);
    CHECK(l["decision"] == (probs[1] > probs[0] ? 1 : 0));
  }

  app::EvaluateOptions e;
  e.predictions = out / "predictions" / "predictions.jsonl";
  e.gold = ws / "test.en.jsonl";
  const auto scored = app::cmd_evaluate(e);
  CHECK(scored["score"].get<double>() == predicted["score"].get<double>());
  e.predictions = out / "predictions" / "submission.txt";
  CHECK(app::cmd_evaluate(e)["score"].get<double>() == predicted["score"].get<double>());
}

TEST_CASE("kfold plans, caches and ensembles") {
  workspace::Workspace ws("app-kfold");
  const auto path = ws.config(workspace::tiny_config("task_a", 2));
  const auto config = app::load_run_config(path);
  const auto first = app::cmd_kfold(config);
  CHECK(!first.partial);
  CHECK(first.summary["planned"] == 2);
  CHECK(first.summary["trained"] == 2);
  const fs::path out = config.output_dir;
  for (const char* f : {"config.json", "plan.json", "cv_report.json"}) CHECK(fs::exists(out / f));
  const auto cv = ojson::parse(scratch::read(out / "cv_report.json"));
  CHECK(cv["configs"].size() == 1);
  CHECK(cv["configs"][0]["completed"] == 2);
  CHECK(Registry(out / "registry").completed_keys().size() == 2);

  const auto again = app::cmd_kfold(app::load_run_config(path));
  CHECK(again.summary["trained"] == 0);
  CHECK(again.summary["cached"] == 2);

  app::PredictOptions p;
  p.run_dir = out;
  p.test_path = ws / "test.ar.jsonl";
  p.language = Language::ar;
  const auto ensemble = app::cmd_predict(p);
  CHECK(ensemble["members"].size() == 2);

  p.mode = "single";
  p.out_dir = ws / "single";
  const auto single = app::cmd_predict(p);
  CHECK(single["members"].size() == 1);

  p.key = "run-0000000000000000";
  CHECK(code_of([&] { app::cmd_predict(p); }) == Errc::missing_artifact);

  app::EvaluateOptions e;
  e.predictions = out / "predictions" / "predictions.jsonl";
  e.gold = ws / "test.ar.jsonl";
  e.language = Language::ar;
  CHECK(app::cmd_evaluate(e)["score"].get<double>() == ensemble["score"].get<double>());
}

TEST_CASE("task C predicts over built pairs and evaluates against them") {
  workspace::Workspace ws("app-pairs");
  const auto config = app::load_run_config(ws.config(workspace::tiny_config("task_c", 2)));
  app::cmd_train(config);
  app::PredictOptions p;
  p.run_dir = config.output_dir;
  p.test_path = ws / "test.en.jsonl";
  const auto predicted = app::cmd_predict(p);
  const fs::path pairs = fs::path(config.output_dir) / "predictions" / "pairs.jsonl";
  REQUIRE(fs::exists(pairs));
  // One pair per sarcastic test row, in a seeded random order.
  CHECK(line_count(pairs) == 4);
  CHECK(predicted["examples"] == 4);

  app::EvaluateOptions e;
  e.predictions = fs::path(config.output_dir) / "predictions" / "predictions.jsonl";
  e.gold = pairs;
  e.gold_format = DataFormat::pairs_jsonl;
  CHECK(app::cmd_evaluate(e)["score"].get<double>() == predicted["score"].get<double>());
  e.gold = ws / "test.en.jsonl";
  e.gold_format.reset();
  e.task = TaskKind::task_c;
  CHECK(code_of([&] { app::cmd_evaluate(e); }) == Errc::config);
}

TEST_CASE("missing artifacts and malformed predictions") {
  scratch::Dir dir("app-missing");
  app::PredictOptions p;
  p.run_dir = dir / "nothing";
  p.test_path = dir / "t.jsonl";
  CHECK(code_of([&] { app::cmd_predict(p); }) == Errc::missing_artifact);

  scratch::write(dir / "gold.jsonl", R"({"id":"a","text":"x","sarcastic":1})" "\n" R"({"id":"b","text":"y","sarcastic":0})" "\n");
  app::EvaluateOptions e;
  e.gold = dir / "gold.jsonl";
  e.predictions = dir / "preds.jsonl";
  scratch::write(e.predictions, R"({"id":"a","decision":1})" "\n");
  CHECK(code_of([&] { app::cmd_evaluate(e); }) == Errc::schema);
  scratch::write(e.predictions, R"({"id":"a","decision":1})" "\n" R"({"id":"c","decision":0})" "\n");
  CHECK(code_of([&] { app::cmd_evaluate(e); }) == Errc::schema);
  scratch::write(e.predictions, R"({"id":"b","decision":0})" "\n" R"({"id":"a","decision":1})" "\n");
  CHECK(app::cmd_evaluate(e)["score"] == 1.0);
  scratch::write(e.predictions, "task_a\n1\n2\n");
  CHECK(code_of([&] { app::cmd_evaluate(e); }) == Errc::schema);
}

TEST_CASE("output line formats") {
  Decision d;
  d.label = 1;
  const std::vector<double> probs = {0.25, 0.75};
  CHECK(app::predictions_line("x-1", probs, HeadKind::binary, d).dump() ==
        R"({"id":"x-1","probabilities":[0.25,0.75],"decision":1})");
  Decision m;
  m.labels = {1, 0, 0, 1, 0, 0};
  const std::vector<Decision> two = {m, Decision{}};
  CHECK(app::submission_text(TaskKind::task_b, two) == "task_b\n1,0,0,1,0,0\n0,0,0,0,0,0\n");
  CHECK(app::submission_text(TaskKind::task_a, std::vector<Decision>{d}) == "task_a\n1\n");
}

TEST_CASE("tokenize lines and dataset stats") {
  CHECK(app::tokenize_line("A", 8, false) == std::vector<std::int32_t>{1, 70, 2});
  CHECK(app::tokenize_line("A\tB", 8, true) == std::vector<std::int32_t>{1, 70, 2, 71, 2});

  workspace::Workspace ws("app-stats", 10);
  const auto s = app::cmd_stats(ws / "train.en.jsonl", DataFormat::jsonl, Language::en, true);
  CHECK(s["total"] == 10);
  CHECK(s["positives"] == 5);
  CHECK(s["negatives"] == 5);
  CHECK(s["with_rephrase"] == 5);
  CHECK(s["matches_reference"] == false);
}
