#include <doctest.h>

#include <functional>
#include <cstdlib>

#include "ironbench/error.hpp"
#include "ironbench/app.hpp"
#include "oracles/oracle_values.hpp"
#include "support/scratch.hpp"

using namespace ironbench;
namespace app = ironbench::app;

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

app::RunConfig parse(const std::string& text) { return app::run_config_from_json(ojson::parse(text), "/base"); }

// Restores IRONBENCH_RUN_DIR on scope exit.
struct EnvGuard {
  EnvGuard() {
    if (const char* v = std::getenv("IRONBENCH_RUN_DIR")) saved = v;
  }
  ~EnvGuard() {
    if (saved.empty()) ::unsetenv("IRONBENCH_RUN_DIR");
    else ::setenv("IRONBENCH_RUN_DIR", saved.c_str(), 1);
  }
  std::string saved;
};

}  // namespace


TEST_CASE("FNV-1a reference vectors") {
  CHECK(fnv1a64("") == oracle::kFnvEmptyAFoobar[0]);
  CHECK(fnv1a64("a") == oracle::kFnvEmptyAFoobar[1]);
  CHECK(fnv1a64("foobar") == oracle::kFnvEmptyAFoobar[2]);
  CHECK(hex64(0xaf63dc4c8601ec8cULL) == "af63dc4c8601ec8c");
  CHECK(hex64(1) == "0000000000000001");
}

TEST_CASE("model and train configs round trip through JSON") {
  ModelConfig m;
  m.d_model = 32;
  m.dropout_rate = 0.1;
  CHECK(model_config_from_json(to_json(m)) == m);
  TrainConfig t;
  t.peak_lr = 2e-4;
  t.beta2 = 0.98;
  t.class_weights = {1.0, 3.0};
  t.seed = 123456789012345ULL;
  CHECK(train_config_from_json(to_json(t)) == t);
  CHECK(to_json(t)["betas"].size() == 2);

  try {
    model_config_from_json(ojson{{"dmodel", 3}});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::config);
    CHECK(std::string(e.what()).find("model.dmodel") != std::string::npos);
  }
  CHECK(code_of([] { train_config_from_json(ojson{{"epochs", "ten"}}); }) == Errc::config);
}

TEST_CASE("metrics reports round trip through JSON") {
  MetricsReport r;
  r.task = TaskKind::task_b;
  r.language = "en";
  r.examples = 12;
  r.counts = {1, 2, 3, 4};
  r.f1 = 0.25;
  r.per_label_f1 = std::array<double, 6>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  r.macro_f1 = 0.35;
  r.macro_f1_with_none = 0.4;
  r.score = 0.35;
  const auto back = metrics_report_from_json(to_json(r));
  CHECK(back.counts == r.counts);
  CHECK(*back.per_label_f1 == *r.per_label_f1);
  CHECK(*back.macro_f1_with_none == 0.4);
  CHECK(back.score == r.score);
}

TEST_CASE("run config defaults, aliases and resolved paths") {
  const auto c = parse(R"({"data":{"paths":{"en":"d/en.jsonl"}},"train":{"dropout":0.2,"max_seq_len":64}})");
  CHECK(c.data.paths.at("en") == "/base/d/en.jsonl");
  CHECK(c.model.dropout_rate == 0.2);
  CHECK(c.model.max_seq_len == 64);
  CHECK(c.cv.k == 10);
  CHECK(c.grid.lrs == std::vector<double>{c.train.peak_lr});
  CHECK(c.grid.epochs == std::vector<std::size_t>{c.train.epochs});
  CHECK(c.output_dir == "/base/runs");
  CHECK(c.task.head == HeadKind::binary);

  const auto echoed = app::run_config_from_json(c.to_json(), "/elsewhere");
  CHECK(echoed.to_json() == c.to_json());

  const auto langs = parse(R"({"data":{"languages":"en,ar"},"task":{"kind":"C"}})");
  CHECK(langs.data.languages == std::vector<Language>{Language::en, Language::ar});
  CHECK(langs.task.head == HeadKind::pair);
}

TEST_CASE("run config rejects bad documents") {
  CHECK(code_of([] { parse(R"({"trian":{}})"); }) == Errc::config);
  CHECK(code_of([] { parse(R"({"train":{"lr":1}})"); }) == Errc::config);
  CHECK(code_of([] { parse(R"({"task":{"kind":"B"},"data":{"languages":["en","ar"]}})"); }) == Errc::config);
  CHECK(code_of([] { parse(R"({"task":{"kind":"A","head":"pair"}})"); }) == Errc::config);
  CHECK(code_of([] { parse(R"({"data":{"format":"pairs_csv"}})"); }) == Errc::config);
  CHECK(code_of([] { parse(R"({"cv":{"k":1}})"); }) == Errc::config);
  CHECK(code_of([] { parse(R"({"model":{"dropout_rate":0.1},"train":{"dropout":0.3}})"); }) == Errc::config);
  CHECK(code_of([] { parse(R"({"data":{"languages":"en,fr"}})"); }) == Errc::config);
}

TEST_CASE("overrides and the run-dir environment variable") {
  EnvGuard guard;
  scratch::Dir dir("config");
  scratch::write(dir / "c.json", R"({"train":{"seed":1},"output":{"dir":"out"}})");
  ::unsetenv("IRONBENCH_RUN_DIR");
  auto c = app::load_run_config(dir / "c.json", ojson{{"train.seed", 7}, {"cv.k", 3}});
  CHECK(c.train.seed == 7);
  CHECK(c.cv.k == 3);
  CHECK(c.output_dir == dir.path() / "out");

  ::setenv("IRONBENCH_RUN_DIR", (dir / "from-env").c_str(), 1);
  c = app::load_run_config(dir / "c.json");
  CHECK(c.output_dir == dir.path() / "from-env");
  c = app::load_run_config(dir / "c.json", ojson{{"output.dir", (dir / "explicit").string()}});
  CHECK(c.output_dir == dir.path() / "explicit");

  CHECK(code_of([&] { app::load_run_config(dir / "missing.json"); }) == Errc::config);
  scratch::write(dir / "broken.json", "{");
  CHECK(code_of([&] { app::load_run_config(dir / "broken.json"); }) == Errc::config);
  CHECK(code_of([&] { app::load_run_config(dir / "c.json", ojson{{"train.colour", 1}}); }) == Errc::config);
}
