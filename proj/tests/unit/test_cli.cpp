#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <string>

#include "support/workspace.hpp"

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// Runs the tool with `args` (already shell-quoted), capturing stdout.
Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" IRONBENCH_CLI_PATH "' " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, pipe)) > 0;) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("tokenize prints ids per line") {
  scratch::Dir dir("cli-tok");
  scratch::write(dir / "in.txt", "A\nAB\n");
  CHECK(run("tokenize " + q(dir / "in.txt")).out == "1 70 2\n1 70 71 2\n");
  CHECK(run("tokenize --pair " + q(dir / "in.txt")).code == 2);
  scratch::write(dir / "pairs.txt", "A\tB\n");
  CHECK(run("tokenize --pair " + q(dir / "pairs.txt")).out == "1 70 2 71 2\n");
  CHECK(run("tokenize " + q(dir / "absent.txt")).code == 5);
}

TEST_CASE("exit codes") {
  scratch::Dir dir("cli-codes");
  scratch::write(dir / "bad.json", R"({"train":{"epochs":"many"}})");
  CHECK(run("train --config " + q(dir / "bad.json")).code == 2);
  CHECK(run("predict --run " + q(dir / "no-run") + " --test " + q(dir / "t.jsonl")).code == 5);
  CHECK(run("frobnicate").code != 0);
  CHECK(run("gradcheck --coords 20").code == 0);
  CHECK(run("gradcheck --coords 20 --tolerance 0").code == 3);
}

TEST_CASE("train with overrides, languages and the run-dir variable, then predict and evaluate") {
  workspace::Workspace ws("cli-train", 12);
  const auto config = ws.config(workspace::tiny_config("task_a", 2));
  const auto run_dir = ws / "env-runs";
  const auto trained =
      run("train --config " + q(config) + " --languages en --train.seed 7", "IRONBENCH_RUN_DIR=" + q(run_dir));
  REQUIRE(trained.code == 0);
  const auto echoed = nlohmann::json::parse(scratch::read(run_dir / "config.json"));
  CHECK(echoed["train"]["seed"] == 7);
  CHECK(echoed["data"]["languages"] == nlohmann::json::array({"en"}));

  const auto predicted = run("predict --run " + q(run_dir) + " --test " + q(ws / "test.en.jsonl"));
  REQUIRE(predicted.code == 0);
  const auto p = nlohmann::json::parse(predicted.out);
  const auto evaluated = run("evaluate --predictions " + q(run_dir / "predictions" / "submission.txt") + " --gold " +
                             q(ws / "test.en.jsonl"));
  REQUIRE(evaluated.code == 0);
  CHECK(nlohmann::json::parse(evaluated.out)["score"] == p["score"]);

  const auto stats = run("stats --data " + q(ws / "train.en.jsonl"));
  CHECK(stats.code == 0);
  CHECK(nlohmann::json::parse(stats.out)["total"] == 12);
  CHECK(run("stats --reference --data " + q(ws / "train.en.jsonl")).code == 1);
}

TEST_CASE("kfold with jobs and best-per-fold") {
  workspace::Workspace ws("cli-kfold", 12);
  const auto config = ws.config(workspace::tiny_config("task_a", 2));
  const auto r = run("kfold --config " + q(config) + " --jobs 2 --best-per-fold");
  REQUIRE(r.code == 0);
  const auto summary = nlohmann::json::parse(r.out);
  CHECK(summary["trained"] == 2);
  const auto echoed = nlohmann::json::parse(scratch::read(ws / "runs" / "task_a" / "config.json"));
  CHECK(echoed["cv"]["jobs"] == 2);
  CHECK(echoed["cv"]["best_per_fold"] == true);
  CHECK(run("kfold --config " + q(config) + " --cv.k 1").code == 2);
}
