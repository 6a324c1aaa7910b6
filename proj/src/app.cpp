#include "ironbench/app.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "ironbench/checkpoint.hpp"
#include "ironbench/error.hpp"
#include "ironbench/multilingual.hpp"
#include "ironbench/seed.hpp"

namespace ironbench::app {

namespace {

std::string read_text(const fs::path& path, Errc missing = Errc::missing_artifact) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(missing, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io, "cannot write " + path.string());
  out << text;
  if (!out) fail(Errc::io, "short write to " + path.string());
}

ojson parse_json(const std::string& text, const std::string& what, Errc code = Errc::config) {
  try {
    return ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(code, what + ": " + e.what());
  }
}

template <typename T>
T get(const ojson& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(Errc::config, where + " has the wrong type");
  }
}

std::vector<Language> parse_languages(const ojson& j, const std::string& where) {
  std::vector<std::string> names;
  if (j.is_string()) {
    std::stringstream ss(j.get<std::string>());
    for (std::string part; std::getline(ss, part, ',');)
      if (!part.empty()) names.push_back(part);
  } else {
    names = get<std::vector<std::string>>(j, where);
  }
  std::vector<Language> out;
  for (const auto& n : names) {
    Language lang;
    try {
      lang = parse_language(n);
    } catch (const Error&) {
      fail(Errc::config, where + ": unknown language '" + n + "'");
    }
    require(std::find(out.begin(), out.end(), lang) == out.end(), Errc::config, where + ": duplicate language " + n);
    out.push_back(lang);
  }
  require(!out.empty(), Errc::config, where + " is empty");
  return out;
}

std::string_view to_string(AverageMode mode) { return mode == AverageMode::logits ? "logits" : "probabilities"; }
std::string_view to_string(MacroVariant v) { return v == MacroVariant::with_none ? "with_none" : "six_labels"; }

AverageMode parse_average(const std::string& s) {
  if (s == "probabilities") return AverageMode::probabilities;
  if (s == "logits") return AverageMode::logits;
  fail(Errc::config, "cv.average must be 'probabilities' or 'logits'");
}

MacroVariant parse_macro_variant(const std::string& s) {
  if (s == "six_labels") return MacroVariant::six_labels;
  if (s == "with_none") return MacroVariant::with_none;
  fail(Errc::config, "task.macro_variant must be 'six_labels' or 'with_none'");
}

DataFormat parse_format(const std::string& s, const std::string& where) {
  try {
    return parse_data_format(s);
  } catch (const Error&) {
    fail(Errc::config, where + ": unknown format '" + s + "'");
  }
}

// Sets a.b.c inside `doc`, creating objects on the way.
void set_dotted(ojson& doc, const std::string& dotted, const ojson& value) {
  ojson* node = &doc;
  std::stringstream ss(dotted);
  std::vector<std::string> parts;
  for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);
  require(!parts.empty(), Errc::config, "empty override key");
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    auto& child = (*node)[parts[i]];
    if (child.is_null()) child = ojson::object();
    require(child.is_object(), Errc::config, "override " + dotted + ": " + parts[i] + " is not a section");
    node = &child;
  }
  (*node)[parts.back()] = value;
}

fs::path resolve(const fs::path& p, const fs::path& base) { return p.is_absolute() ? p : fs::absolute(base / p); }

std::vector<Sample> encode_test(TaskKind task, const fs::path& path, DataFormat format, Language language,
                                std::size_t max_seq_len, std::uint64_t pair_seed, std::vector<PairExample>* built) {
  if (task == TaskKind::task_c) {
    if (is_pair_format(format)) return make_pair_samples(load_pairs(path, format, language), max_seq_len);
    std::vector<TextExample> with_rephrase;
    for (auto& ex : load_dataset(path, format, language))
      if (ex.rephrase) with_rephrase.push_back(std::move(ex));
    auto pairs = build_pairs(with_rephrase, false, pair_seed);
    if (built) *built = pairs;
    return make_pair_samples(pairs, max_seq_len);
  }
  require(!is_pair_format(format), Errc::config, "pair files only feed task C");
  return make_text_samples(task, load_dataset(path, format, language), max_seq_len, false);
}

ojson reports_json(const LanguageReports& reports) {
  ojson j;
  j["report"] = to_json(reports.pooled);
  ojson per = ojson::object();
  for (const auto& [lang, r] : reports.per_language) per[lang] = to_json(r);
  j["per_language"] = per;
  return j;
}

std::string metric_name(TaskKind task) {
  switch (task) {
    case TaskKind::task_a: return "f1_sarcastic";
    case TaskKind::task_b: return "macro_f1";
    case TaskKind::task_c: return "accuracy";
  }
  return "f1_sarcastic";
}

}  // namespace

ojson RunConfig::to_json() const {
  ojson j;
  ojson paths = ojson::object();
  for (const auto& [lang, p] : data.paths) paths[lang] = p.string();
  std::vector<std::string> langs;
  for (auto l : data.languages) langs.emplace_back(ironbench::to_string(l));
  j["data"] = {{"paths", paths},
               {"format", std::string(ironbench::to_string(data.format))},
               {"languages", langs},
               {"augment_pairs", data.augment_pairs},
               {"stratify", data.stratify}};
  j["model"] = ironbench::to_json(model);
  j["train"] = ironbench::to_json(train);
  j["cv"] = {{"k", cv.k},
             {"seeds", cv.seeds},
             {"average", std::string(app::to_string(cv.average))},
             {"best_per_fold", cv.best_per_fold},
             {"jobs", cv.jobs}};
  j["grid"] = {{"lrs", grid.lrs}, {"epochs", grid.epochs}};
  j["task"] = {{"kind", std::string(ironbench::to_string(task.kind))},
               {"head", std::string(ironbench::to_string(task.head))},
               {"macro_variant", std::string(app::to_string(task.macro_variant))}};
  j["output"] = {{"dir", output_dir.string()}};
  return j;
}

RunConfig run_config_from_json(const ojson& doc, const fs::path& base_dir) {
  reject_unknown_keys(doc, {"data", "model", "train", "cv", "grid", "task", "output"}, "config");
  RunConfig c;
  const auto section = [&](const char* name) { return doc.contains(name) ? doc.at(name) : ojson::object(); };

  const ojson data = section("data");
  reject_unknown_keys(data, {"paths", "format", "languages", "augment_pairs", "stratify"}, "data");
  if (data.contains("paths")) {
    reject_unknown_keys(data["paths"], {"en", "ar"}, "data.paths");
    for (const auto& [lang, p] : data["paths"].items())
      c.data.paths[lang] = resolve(get<std::string>(p, "data.paths." + lang), base_dir);
  }
  if (data.contains("format")) c.data.format = parse_format(get<std::string>(data["format"], "data.format"), "data.format");
  if (data.contains("languages")) c.data.languages = parse_languages(data["languages"], "data.languages");
  if (data.contains("augment_pairs")) c.data.augment_pairs = get<bool>(data["augment_pairs"], "data.augment_pairs");
  if (data.contains("stratify")) c.data.stratify = get<bool>(data["stratify"], "data.stratify");

  c.model = model_config_from_json(section("model"));
  ojson train = section("train");
  require(train.is_object(), Errc::config, "train must be an object");
  // Dropout and sequence length are model settings; the train section may
  // name them too.
  const ojson model_doc = section("model");
  if (train.contains("dropout")) {
    const double rate = get<double>(train["dropout"], "train.dropout");
    require(!model_doc.contains("dropout_rate") || model_doc["dropout_rate"] == train["dropout"], Errc::config,
            "train.dropout disagrees with model.dropout_rate");
    c.model.dropout_rate = rate;
    train.erase("dropout");
  }
  if (train.contains("max_seq_len")) {
    const auto len = get<std::size_t>(train["max_seq_len"], "train.max_seq_len");
    require(!model_doc.contains("max_seq_len") || model_doc["max_seq_len"] == train["max_seq_len"], Errc::config,
            "train.max_seq_len disagrees with model.max_seq_len");
    c.model.max_seq_len = len;
    train.erase("max_seq_len");
  }
  c.train = train_config_from_json(train);

  const ojson cv = section("cv");
  reject_unknown_keys(cv, {"k", "seeds", "average", "best_per_fold", "jobs"}, "cv");
  if (cv.contains("k")) c.cv.k = get<int>(cv["k"], "cv.k");
  if (cv.contains("seeds")) c.cv.seeds = get<std::vector<std::uint64_t>>(cv["seeds"], "cv.seeds");
  if (cv.contains("average")) c.cv.average = parse_average(get<std::string>(cv["average"], "cv.average"));
  if (cv.contains("best_per_fold")) c.cv.best_per_fold = get<bool>(cv["best_per_fold"], "cv.best_per_fold");
  if (cv.contains("jobs")) c.cv.jobs = get<std::size_t>(cv["jobs"], "cv.jobs");

  const ojson grid = section("grid");
  reject_unknown_keys(grid, {"lrs", "epochs"}, "grid");
  if (grid.contains("lrs")) c.grid.lrs = get<std::vector<double>>(grid["lrs"], "grid.lrs");
  if (grid.contains("epochs")) c.grid.epochs = get<std::vector<std::size_t>>(grid["epochs"], "grid.epochs");
  if (c.grid.lrs.empty()) c.grid.lrs = {c.train.peak_lr};
  if (c.grid.epochs.empty()) c.grid.epochs = {c.train.epochs};

  const ojson task = section("task");
  reject_unknown_keys(task, {"kind", "head", "macro_variant"}, "task");
  if (task.contains("kind")) {
    try {
      c.task.kind = parse_task_kind(get<std::string>(task["kind"], "task.kind"));
    } catch (const Error&) {
      fail(Errc::config, "task.kind must be A, B or C");
    }
  }
  c.task.head = head_for(c.task.kind);
  if (task.contains("head")) {
    HeadKind head;
    try {
      head = parse_head_kind(get<std::string>(task["head"], "task.head"));
    } catch (const Error&) {
      fail(Errc::config, "task.head must be binary, multilabel6 or pair");
    }
    require(head == c.task.head, Errc::config,
            "task.head " + std::string(ironbench::to_string(head)) + " does not fit " +
                std::string(ironbench::to_string(c.task.kind)));
  }
  if (task.contains("macro_variant"))
    c.task.macro_variant = parse_macro_variant(get<std::string>(task["macro_variant"], "task.macro_variant"));

  const ojson output = section("output");
  reject_unknown_keys(output, {"dir"}, "output");
  if (output.contains("dir")) c.output_dir = get<std::string>(output["dir"], "output.dir");
  c.output_dir = resolve(c.output_dir, base_dir);

  c.model.validate();
  c.train.validate();
  require(c.cv.k >= 2, Errc::config, "cv.k must be at least 2");
  require(!c.cv.seeds.empty(), Errc::config, "cv.seeds is empty");
  require(c.cv.jobs >= 1, Errc::config, "cv.jobs must be positive");
  for (double lr : c.grid.lrs) require(lr > 0.0, Errc::config, "grid.lrs must be positive");
  for (auto e : c.grid.epochs) require(e >= 1, Errc::config, "grid.epochs must be positive");
  if (c.task.kind == TaskKind::task_b)
    for (auto l : c.data.languages)
      require(l == Language::en, Errc::config, "task B is English only");
  require(c.task.kind == TaskKind::task_c || !is_pair_format(c.data.format), Errc::config,
          "pair formats only feed task C");
  return c;
}

RunConfig load_run_config(const fs::path& path, const ojson& overrides) {
  ojson doc = parse_json(read_text(path, Errc::config), path.string());
  require(doc.is_object(), Errc::config, path.string() + " must hold a JSON object");
  if (const char* env = std::getenv("IRONBENCH_RUN_DIR"); env && *env)
    set_dotted(doc, "output.dir", fs::absolute(env).string());
  require(overrides.is_object(), Errc::config, "overrides must be an object");
  for (const auto& [key, value] : overrides.items()) {
    ojson v = value;
    // Paths given on the command line are relative to the caller.
    if ((key.rfind("data.paths.", 0) == 0 || key == "output.dir") && v.is_string())
      v = fs::absolute(v.get<std::string>()).string();
    set_dotted(doc, key, v);
  }
  return run_config_from_json(doc, fs::absolute(path).parent_path());
}

std::vector<Sample> load_samples(const RunConfig& config) {
  const auto task = config.task.kind;
  JointDataset en{task, {}, {}}, ar{task, {}, {}};
  for (const auto lang : config.data.languages) {
    const std::string name(to_string(lang));
    const auto it = config.data.paths.find(name);
    require(it != config.data.paths.end(), Errc::config, "data.paths." + name + " is not set");
    require(fs::exists(it->second), Errc::config, "data file " + it->second.string() + " does not exist");
    auto& side = lang == Language::en ? en : ar;
    if (task == TaskKind::task_c && is_pair_format(config.data.format)) {
      side.pairs = load_pairs(it->second, config.data.format, lang);
    } else {
      side.texts = load_dataset(it->second, config.data.format, lang);
      for (const auto& ex : side.texts) validate(ex);
    }
  }
  const JointDataset joint = merge_bilingual(en, ar, derive_seed(config.train.seed, seed_stream::merge));
  const auto max_len = config.model.max_seq_len;
  if (task != TaskKind::task_c) return make_text_samples(task, joint.texts, max_len);
  if (is_pair_format(config.data.format)) return make_pair_samples(joint.pairs, max_len);
  std::vector<TextExample> with_rephrase;
  for (const auto& ex : joint.texts)
    if (ex.rephrase) with_rephrase.push_back(ex);
  require(!with_rephrase.empty(), Errc::config, "task C needs examples with a rephrase");
  return make_pair_samples(
      build_pairs(with_rephrase, config.data.augment_pairs, derive_seed(config.train.seed, seed_stream::pairs)),
      max_len);
}

ojson cmd_train(const RunConfig& config) {
  const auto samples = load_samples(config);
  require(!samples.empty(), Errc::config, "no training examples");
  const fs::path out = config.output_dir;
  fs::create_directories(out);
  write_text(out / "config.json", config.to_json().dump(2) + "\n");

  const auto plan = plan_folds(samples, config.cv.k, config.cv.seeds.front(), config.data.stratify);
  const auto split = split_fold(samples, plan, 0);
  const Model model = make_model(config.model, config.task.head, derive_seed(config.train.seed, seed_stream::init));
  const TaskKind task = config.task.kind;
  const double threshold = config.train.multilabel_threshold;
  const MacroVariant variant = config.task.macro_variant;
  const auto metric = [&](const Matrix& p, std::span<const Sample> eval) {
    return official_metric(task, p, eval, threshold, variant);
  };

  write_text(out / "log.jsonl", "");
  std::ofstream log(out / "log.jsonl", std::ios::binary | std::ios::app);
  TrainResult result;
  try {
    result = train_epochs(model, split.train, split.eval, config.train, metric, [&](const EpochLog& e) {
      log << to_json_line(e) << '\n';
      log.flush();
    });
  } catch (const TrainingAborted& e) {
    save_checkpoint(out / "checkpoint.bin", e.last_good());
    throw;
  }
  save_checkpoint(out / "checkpoint.bin", result.best);

  ojson eval;
  eval["metric"] = metric_name(task);
  eval["train_examples"] = split.train.size();
  eval["eval_examples"] = split.eval.size();
  eval["best_epoch"] = result.best_epoch;
  eval["best_metric"] = result.best_metric ? ojson(*result.best_metric) : ojson();
  if (!split.eval.empty()) {
    const auto reports = eval_per_language(result.best, task, split.eval, threshold, config.data.languages, variant);
    const auto rj = reports_json(reports);
    eval["report"] = rj["report"];
    eval["per_language"] = rj["per_language"];
  }
  write_text(out / "eval.json", eval.dump(2) + "\n");

  ojson summary;
  summary["command"] = "train";
  summary["run_dir"] = out.string();
  summary["best_epoch"] = result.best_epoch;
  summary["best_metric"] = eval["best_metric"];
  summary["total_steps"] = result.total_steps;
  return summary;
}

KfoldResult cmd_kfold(const RunConfig& config) {
  const auto samples = load_samples(config);
  require(!samples.empty(), Errc::config, "no training examples");
  const fs::path out = config.output_dir;
  fs::create_directories(out);
  write_text(out / "config.json", config.to_json().dump(2) + "\n");

  const double threshold = config.train.multilabel_threshold;
  const auto runs = plan_runs(config.cv.k, config.cv.seeds, config.grid, config.task.kind,
                              dataset_fingerprint(samples),
                              config_fingerprint(config.model, config.train, config.data.stratify, threshold,
                                                 config.task.macro_variant));
  ojson plan;
  plan["planned"] = runs.size();
  ojson list = ojson::array();
  for (const auto& r : runs) {
    ojson e = r.to_json();
    e["key"] = r.key();
    list.push_back(e);
  }
  plan["runs"] = list;
  write_text(out / "plan.json", plan.dump(2) + "\n");

  const Registry registry(out / "registry");
  ExecuteOptions options;
  options.jobs = config.cv.jobs;
  options.stratify = config.data.stratify;
  options.threshold = threshold;
  options.variant = config.task.macro_variant;
  const auto outcomes = execute_runs(runs, samples, config.model, config.train, registry, options);
  const auto report = cross_validation_report(outcomes);
  ojson cv = report.to_json();
  cv["metric"] = metric_name(config.task.kind);
  write_text(out / "cv_report.json", cv.dump(2) + "\n");

  KfoldResult result;
  result.partial = report.partial;
  std::size_t trained = 0, cached = 0;
  ojson failures = ojson::array();
  for (const auto& o : outcomes) {
    if (o.status == RunStatus::trained) ++trained;
    if (o.status == RunStatus::cached) ++cached;
    if (o.status == RunStatus::failed) failures.push_back({{"key", o.spec.key()}, {"error", o.error}});
  }
  result.summary["command"] = "kfold";
  result.summary["run_dir"] = out.string();
  result.summary["planned"] = runs.size();
  result.summary["trained"] = trained;
  result.summary["cached"] = cached;
  result.summary["failed"] = failures;
  result.summary["partial"] = report.partial;
  return result;
}

ojson predictions_line(const std::string& id, std::span<const double> probabilities, HeadKind head,
                       const Decision& decision) {
  ojson j;
  j["id"] = id;
  j["probabilities"] = std::vector<double>(probabilities.begin(), probabilities.end());
  if (head == HeadKind::multilabel6)
    j["decision"] = std::vector<int>(decision.labels.begin(), decision.labels.end());
  else
    j["decision"] = decision.label;
  return j;
}

std::string submission_text(TaskKind task, std::span<const Decision> decisions) {
  std::string out = std::string(to_string(task)) + "\n";
  for (const auto& d : decisions) {
    if (task == TaskKind::task_b) {
      for (std::size_t j = 0; j < kNumSublabels; ++j) out += (j ? "," : "") + std::to_string(d.labels[j]);
    } else {
      out += std::to_string(d.label);
    }
    out += '\n';
  }
  return out;
}

ojson cmd_predict(const PredictOptions& options) {
  const fs::path run_dir = options.run_dir;
  require(fs::exists(run_dir / "config.json"), Errc::missing_artifact, "no config.json in " + run_dir.string());
  const RunConfig config =
      run_config_from_json(parse_json(read_text(run_dir / "config.json"), "config.json"), run_dir);
  require(options.mode == "ensemble" || options.mode == "single", Errc::config, "mode must be ensemble or single");
  const AverageMode average = options.average.value_or(config.cv.average);
  const bool best_per_fold = options.best_per_fold.value_or(config.cv.best_per_fold);

  // Members: registry runs of a kfold directory, or the checkpoint of a train run.
  std::vector<std::pair<std::string, Model>> members;
  if (fs::exists(run_dir / "plan.json")) {
    const auto plan = parse_json(read_text(run_dir / "plan.json"), "plan.json", Errc::schema);
    std::vector<RunSpec> runs;
    for (const auto& r : plan.at("runs")) runs.push_back(RunSpec::from_json(r));
    const Registry registry(run_dir / "registry");
    auto chosen = select_members(registry_outcomes(runs, registry), best_per_fold);
    if (options.key) {
      const auto it = std::find_if(chosen.begin(), chosen.end(), [&](const RunSpec& s) { return s.key() == *options.key; });
      require(it != chosen.end(), Errc::missing_artifact, "run " + *options.key + " is not a completed member");
      chosen = {*it};
    } else if (options.mode == "single" && !chosen.empty()) {
      chosen.resize(1);
    }
    for (const auto& spec : chosen) members.emplace_back(spec.key(), registry.load_model(spec.key()));
    if (members.size() < runs.size() && options.mode == "ensemble" && !best_per_fold)
      warn("ensemble uses " + std::to_string(members.size()) + " of " + std::to_string(runs.size()) + " planned runs");
  } else if (fs::exists(run_dir / "checkpoint.bin")) {
    members.emplace_back("checkpoint", load_checkpoint(run_dir / "checkpoint.bin"));
  }
  require(!members.empty(), Errc::missing_artifact, "no completed runs under " + run_dir.string());

  const fs::path out = options.out_dir.empty() ? run_dir / "predictions" : options.out_dir;
  fs::create_directories(out);
  const TaskKind task = config.task.kind;
  const HeadKind head = config.task.head;
  const DataFormat format = options.format.value_or(config.data.format);
  std::vector<PairExample> built;
  const auto samples = encode_test(task, options.test_path, format, options.language, config.model.max_seq_len,
                                   derive_seed(config.train.seed, seed_stream::pairs), &built);
  require(!samples.empty(), Errc::schema, "test file has no examples");
  if (!built.empty()) {
    std::string lines;
    for (const auto& p : built)
      lines += ojson{{"id", p.id}, {"language", std::string(to_string(p.language))}, {"text_a", p.text_a},
                     {"text_b", p.text_b}, {"label", p.label}}.dump() + "\n";
    write_text(out / "pairs.jsonl", lines);
  }

  std::vector<Matrix> outputs;
  for (const auto& [key, model] : members) {
    require(model.head == head, Errc::schema, "member " + key + " has a " + std::string(to_string(model.head)) + " head");
    outputs.push_back(average == AverageMode::logits ? predict_logits(model, samples) : predict_proba(model, samples));
  }
  const double threshold = config.train.multilabel_threshold;
  const auto ensemble = average_predictions(std::move(outputs), head, threshold, average);

  std::string lines;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Eigen::RowVectorXd row = ensemble.averaged.row(static_cast<Eigen::Index>(i));
    lines += predictions_line(samples[i].id, std::span<const double>(row.data(), static_cast<std::size_t>(row.size())),
                              head, ensemble.decisions[i])
                 .dump() +
             "\n";
  }
  write_text(out / "predictions.jsonl", lines);
  write_text(out / "submission.txt", submission_text(task, ensemble.decisions));

  ojson summary;
  summary["command"] = "predict";
  summary["out_dir"] = out.string();
  summary["examples"] = samples.size();
  ojson keys = ojson::array();
  for (const auto& m : members) keys.push_back(m.first);
  summary["members"] = keys;
  const bool labelled = std::all_of(samples.begin(), samples.end(), [](const Sample& s) { return s.labelled; });
  if (labelled) {
    const auto reports = reports_by_language(task, ensemble.decisions, samples, {}, config.task.macro_variant);
    const auto rj = reports_json(reports);
    write_text(out / "report.json", rj.dump(2) + "\n");
    summary["score"] = reports.pooled.score;
  }
  return summary;
}

ojson cmd_evaluate(const EvaluateOptions& options) {
  const std::string text = read_text(options.predictions);
  std::vector<std::string> lines;
  {
    std::stringstream ss(text);
    for (std::string line; std::getline(ss, line);) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
  }
  require(!lines.empty(), Errc::schema, options.predictions.string() + " is empty");
  const DataFormat gold_format = options.gold_format.value_or(DataFormat::jsonl);
  const bool jsonl = !lines.front().empty() && lines.front().front() == '{';

  std::optional<TaskKind> task = options.task;
  std::vector<std::string> ids;
  std::vector<Decision> decisions;
  auto parse_labels = [](const std::string& field, std::size_t line_no) {
    Sublabels labels{};
    std::stringstream ss(field);
    std::size_t j = 0;
    for (std::string part; std::getline(ss, part, ',');) {
      require(j < kNumSublabels && (part == "0" || part == "1"), Errc::schema,
              "line " + std::to_string(line_no) + ": bad sublabel decision '" + field + "'");
      labels[j++] = static_cast<std::uint8_t>(part == "1");
    }
    require(j == kNumSublabels, Errc::schema, "line " + std::to_string(line_no) + ": needs 6 sublabel decisions");
    return labels;
  };

  if (jsonl) {
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto j = parse_json(lines[i], "predictions line " + std::to_string(i + 1), Errc::schema);
      Decision d;
      try {
        ids.push_back(j.at("id").get<std::string>());
        const auto& dec = j.at("decision");
        if (dec.is_array()) {
          const auto bits = dec.get<std::vector<int>>();
          require(bits.size() == kNumSublabels, Errc::schema, "decision arrays need 6 entries");
          for (std::size_t b = 0; b < kNumSublabels; ++b) d.labels[b] = static_cast<std::uint8_t>(bits[b] != 0);
          if (!task) task = TaskKind::task_b;
        } else {
          d.label = dec.get<int>();
        }
      } catch (const nlohmann::json::exception& e) {
        fail(Errc::schema, "predictions line " + std::to_string(i + 1) + ": " + e.what());
      }
      decisions.push_back(d);
    }
  } else {
    TaskKind header;
    try {
      header = parse_task_kind(lines.front());
    } catch (const Error&) {
      fail(Errc::schema, "submission header must name the task, got '" + lines.front() + "'");
    }
    require(!task || *task == header, Errc::schema, "submission is for " + std::string(to_string(header)));
    task = header;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      Decision d;
      if (header == TaskKind::task_b) {
        d.labels = parse_labels(lines[i], i + 1);
      } else {
        require(lines[i] == "0" || lines[i] == "1", Errc::schema,
                "line " + std::to_string(i + 1) + ": decision must be 0 or 1");
        d.label = lines[i] == "1";
      }
      decisions.push_back(d);
    }
  }
  if (!task) task = is_pair_format(gold_format) ? TaskKind::task_c : TaskKind::task_a;
  require(*task != TaskKind::task_c || is_pair_format(gold_format), Errc::config,
          "task C gold must be a pair file (predict writes pairs.jsonl for text inputs)");

  // Inputs are never encoded for scoring; only labels matter.
  std::vector<Sample> golds =
      *task == TaskKind::task_c
          ? make_pair_samples(load_pairs(options.gold, gold_format, options.language), 4)
          : make_text_samples(*task, load_dataset(options.gold, gold_format, options.language), 2, true);
  require(decisions.size() == golds.size(), Errc::schema,
          std::to_string(decisions.size()) + " predictions for " + std::to_string(golds.size()) + " gold examples");
  if (jsonl) {
    // Predictions are matched to gold rows by id.
    std::map<std::string, std::size_t> where;
    for (std::size_t i = 0; i < ids.size(); ++i)
      require(where.emplace(ids[i], i).second, Errc::schema, "duplicate prediction id " + ids[i]);
    std::vector<Decision> ordered;
    for (const auto& g : golds) {
      const auto it = where.find(g.id);
      require(it != where.end(), Errc::schema, "no prediction for " + g.id);
      ordered.push_back(decisions[it->second]);
    }
    decisions = std::move(ordered);
  }
  for (const auto& d : decisions)
    require(d.label == 0 || d.label == 1, Errc::schema, "decisions must be 0 or 1");
  const auto reports = reports_by_language(*task, decisions, golds, {}, options.macro_variant);
  ojson out = reports_json(reports);
  out["command"] = "evaluate";
  out["score"] = reports.pooled.score;
  return out;
}

ojson cmd_stats(const fs::path& path, DataFormat format, Language language, bool reference) {
  require(!is_pair_format(format), Errc::config, "stats reads single-sentence files");
  const auto examples = load_dataset(path, format, language);
  const auto s = corpus_stats(examples);
  ojson j;
  j["examples"] = s.examples;
  j["per_language"] = s.per_language;
  j["positives"] = s.positives;
  j["negatives"] = s.negatives;
  j["total"] = s.total;
  j["with_sublabels"] = s.with_sublabels;
  ojson sub;
  for (std::size_t i = 0; i < kNumSublabels; ++i) sub[std::string(kSublabelNames[i])] = s.sublabel_counts[i];
  j["sublabel_counts"] = sub;
  j["with_rephrase"] = s.with_rephrase;
  if (reference) {
    const auto diffs = check_against_reference(s);
    j["reference_mismatches"] = diffs;
    j["matches_reference"] = diffs.empty();
  }
  return j;
}

std::vector<std::int32_t> tokenize_line(const std::string& line, std::size_t max_seq_len, bool pair) {
  auto clean = [](std::string_view raw) {
    try {
      return normalize_text(raw);
    } catch (const Error&) {
      return std::string();  // blank input encodes as specials only
    }
  };
  if (pair) {
    const auto tab = line.find('\t');
    require(tab != std::string::npos, Errc::parse, "pair input needs a tab between the two texts");
    return encode_pair(clean(std::string_view(line).substr(0, tab)), clean(std::string_view(line).substr(tab + 1)),
                       max_seq_len)
        .ids;
  }
  return encode(clean(line), max_seq_len).ids;
}

ojson cmd_gradcheck(const GradCheckOptions& options, const ModelConfig& config) {
  const auto report = grad_check(config, options);
  ojson j;
  j["max_rel_error"] = report.max_rel_error;
  j["worst_parameter"] = report.worst_parameter;
  j["coordinates_checked"] = report.coordinates_checked;
  j["step"] = options.step;
  j["seed"] = options.seed;
  ojson per = ojson::object();
  for (const auto& [name, err] : report.per_parameter) per[name] = err;
  j["per_parameter"] = per;
  return j;
}

}  // namespace ironbench::app
