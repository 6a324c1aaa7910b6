// Command-line front end. Everything goes through the C interface.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ironbench/ironbench.h"

using json = nlohmann::ordered_json;

namespace {

// 0 ok, 2 config or bad input, 3 numerics, 4 partial, 5 missing artifact.
int exit_code(ib_status s) {
  switch (s) {
    case IB_OK: return 0;
    case IB_ERR_NUMERICS: return 3;
    case IB_PARTIAL: return 4;
    case IB_ERR_MISSING_ARTIFACT: return 5;
    case IB_ERR_CONFIG:
    case IB_ERR_PARSE:
    case IB_ERR_LABEL:
    case IB_ERR_EMPTY_TEXT:
    case IB_ERR_MISSING_REPHRASE:
    case IB_ERR_INVALID_FOLD_COUNT:
    case IB_ERR_SCHEMA:
    case IB_ERR_VOCAB:
    case IB_ERR_DECODE:
    case IB_ERR_INVALID_ARGUMENT: return 2;
    default: return 1;
  }
}

using Command = ib_status (*)(const char*, char**);

int run(Command command, const json& request, bool print = true) {
  char* response = nullptr;
  const ib_status s = command(request.dump().c_str(), &response);
  if (response) {
    if (print) std::cout << response << "\n";
    ib_string_free(response);
  }
  if (s != IB_OK) std::cerr << "error: " << ib_last_error() << "\n";
  return exit_code(s);
}

// "--train.seed 7" or "--train.seed=7" pairs left over after option parsing.
json parse_overrides(const std::vector<std::string>& extras) {
  json out = json::object();
  for (std::size_t i = 0; i < extras.size(); ++i) {
    std::string key = extras[i];
    if (key.rfind("--", 0) != 0 || key.find('.') == std::string::npos)
      throw CLI::ValidationError("unexpected argument '" + key + "'");
    key = key.substr(2);
    std::string value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else {
      if (i + 1 >= extras.size()) throw CLI::ValidationError("override --" + key + " needs a value");
      value = extras[++i];
    }
    json parsed;
    try {
      parsed = json::parse(value);
    } catch (const json::exception&) {
      parsed = value;
    }
    out[key] = parsed;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"ironbench: sarcasm classifier training, cross-validation and scoring"};
  cli.require_subcommand(1);
  cli.set_version_flag("--version", std::string(ib_version()));

  // train / kfold
  std::string config_path, languages;
  std::size_t jobs = 0;
  bool best_per_fold = false;
  auto* train = cli.add_subcommand("train", "Train one model, holding out fold 0");
  auto* kfold = cli.add_subcommand("kfold", "Train the k-fold x grid ensemble into a run registry");
  for (auto* sub : {train, kfold}) {
    sub->add_option("--config", config_path, "Run config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--languages", languages, "Languages to train on, e.g. en,ar");
    sub->allow_extras();
    sub->footer("Any config value can be overridden with --<section>.<key> <value>, e.g. --train.seed 7");
  }
  kfold->add_option("--jobs", jobs, "Runs trained in parallel");
  kfold->add_flag("--best-per-fold", best_per_fold, "Ensemble only the best grid point of each fold");

  // predict
  std::string run_dir, test_path, format, language, mode = "ensemble", key, average, out_dir;
  bool predict_best = false;
  auto* predict = cli.add_subcommand("predict", "Predict a test file with a trained run or ensemble");
  predict->add_option("--run", run_dir, "Run directory from train or kfold")->required();
  predict->add_option("--test", test_path, "Test file")->required();
  predict->add_option("--format", format, "jsonl, isarcasm_csv, pairs_jsonl or pairs_csv");
  predict->add_option("--language", language, "Language of the test file (en or ar)");
  predict->add_option("--mode", mode, "ensemble or single")->check(CLI::IsMember({"ensemble", "single"}));
  predict->add_option("--key", key, "Registry run to use in single mode");
  predict->add_flag("--best-per-fold", predict_best, "Ensemble only the best grid point of each fold");
  predict->add_option("--average", average, "probabilities or logits")
      ->check(CLI::IsMember({"probabilities", "logits"}));
  predict->add_option("--out", out_dir, "Output directory (default <run>/predictions)");

  // evaluate
  std::string predictions, gold, gold_format, task, macro_variant;
  auto* evaluate = cli.add_subcommand("evaluate", "Score a predictions or submission file against gold labels");
  evaluate->add_option("--predictions", predictions, "predictions.jsonl or submission.txt")->required();
  evaluate->add_option("--gold", gold, "Gold file")->required();
  evaluate->add_option("--gold-format", gold_format, "Format of the gold file (default jsonl)");
  evaluate->add_option("--language", language, "Language of the gold file");
  evaluate->add_option("--task", task, "A, B or C (default: from the file)");
  evaluate->add_option("--macro-variant", macro_variant, "six_labels or with_none")
      ->check(CLI::IsMember({"six_labels", "with_none"}));

  // tokenize
  std::size_t max_len = 128;
  bool pair = false;
  std::string input = "-";
  auto* tokenize = cli.add_subcommand("tokenize", "Print token ids, one line per input line");
  tokenize->add_option("input", input, "Input file, - for stdin");
  tokenize->add_option("--max-len", max_len, "Maximum sequence length");
  tokenize->add_flag("--pair", pair, "Each line holds two texts separated by a tab");

  // gradcheck
  std::uint64_t seed = 1;
  double step = 1e-5, tolerance = 1e-4;
  std::size_t coords = 200;
  auto* gradcheck = cli.add_subcommand("gradcheck", "Compare backprop with finite differences on a tiny model");
  gradcheck->add_option("--seed", seed);
  gradcheck->add_option("--step", step, "Finite-difference step");
  gradcheck->add_option("--coords", coords, "Coordinates sampled per parameter");
  gradcheck->add_option("--tolerance", tolerance, "Fail above this relative error");

  // stats
  std::string data;
  bool reference = false;
  auto* stats = cli.add_subcommand("stats", "Count examples and labels in a dataset file");
  stats->add_option("--data", data, "Dataset file")->required();
  stats->add_option("--format", format, "jsonl or isarcasm_csv");
  stats->add_option("--language", language, "en or ar");
  stats->add_flag("--reference", reference, "Compare against the published English training counts");

  CLI11_PARSE(cli, argc, argv);

  try {
    if (train->parsed() || kfold->parsed()) {
      auto* sub = train->parsed() ? train : kfold;
      json overrides = parse_overrides(sub->remaining());
      if (!languages.empty()) overrides["data.languages"] = languages;
      if (jobs) overrides["cv.jobs"] = jobs;
      if (best_per_fold) overrides["cv.best_per_fold"] = true;
      return run(train->parsed() ? ib_train : ib_kfold, {{"config", config_path}, {"overrides", overrides}});
    }
    if (predict->parsed()) {
      json req{{"run_dir", run_dir}, {"test", test_path}, {"mode", mode}};
      if (!format.empty()) req["format"] = format;
      if (!language.empty()) req["language"] = language;
      if (!key.empty()) req["key"] = key;
      if (predict_best) req["best_per_fold"] = true;
      if (!average.empty()) req["average"] = average;
      if (!out_dir.empty()) req["out_dir"] = out_dir;
      return run(ib_predict, req);
    }
    if (evaluate->parsed()) {
      json req{{"predictions", predictions}, {"gold", gold}};
      if (!gold_format.empty()) req["gold_format"] = gold_format;
      if (!language.empty()) req["language"] = language;
      if (!task.empty()) req["task"] = task;
      if (!macro_variant.empty()) req["macro_variant"] = macro_variant;
      return run(ib_evaluate, req);
    }
    if (stats->parsed()) {
      json req{{"data", data}, {"reference", reference}};
      if (!format.empty()) req["format"] = format;
      if (!language.empty()) req["language"] = language;
      char* response = nullptr;
      const ib_status s = ib_stats(req.dump().c_str(), &response);
      if (s != IB_OK) {
        std::cerr << "error: " << ib_last_error() << "\n";
        return exit_code(s);
      }
      const json body = json::parse(response);
      std::cout << response << "\n";
      ib_string_free(response);
      return reference && !body.value("matches_reference", false) ? 1 : 0;
    }
    if (gradcheck->parsed()) {
      json req{{"seed", seed}, {"step", step}, {"coordinates", coords}};
      char* response = nullptr;
      const ib_status s = ib_gradcheck(req.dump().c_str(), &response);
      if (s != IB_OK) {
        std::cerr << "error: " << ib_last_error() << "\n";
        return exit_code(s);
      }
      const json body = json::parse(response);
      std::cout << response << "\n";
      ib_string_free(response);
      return body.at("max_rel_error").get<double>() <= tolerance ? 0 : 3;
    }
    if (tokenize->parsed()) {
      std::ifstream file;
      if (input != "-") {
        file.open(input, std::ios::binary);
        if (!file) {
          std::cerr << "error: cannot open " << input << "\n";
          return 5;
        }
      }
      std::istream& in = input == "-" ? std::cin : file;
      std::vector<int32_t> ids(max_len);
      for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t n = 0;
        const ib_status s = ib_tokenize_line(line.c_str(), max_len, pair ? 1 : 0, ids.data(), ids.size(), &n);
        if (s != IB_OK) {
          std::cerr << "error: " << ib_last_error() << "\n";
          return exit_code(s);
        }
        for (std::size_t i = 0; i < n; ++i) std::cout << (i ? " " : "") << ids[i];
        std::cout << "\n";
      }
      return 0;
    }
  } catch (const CLI::Error& e) {
    return cli.exit(e);
  }
  return 0;
}
