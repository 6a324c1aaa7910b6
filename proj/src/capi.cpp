#include "ironbench/ironbench.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "ironbench/app.hpp"
#include "ironbench/checkpoint.hpp"
#include "ironbench/error.hpp"

using namespace ironbench;

struct ib_model {
  Model model;
};

namespace {

thread_local std::string last_error;

ib_status status_of(Errc code) {
  switch (code) {
    case Errc::empty_text: return IB_ERR_EMPTY_TEXT;
    case Errc::parse: return IB_ERR_PARSE;
    case Errc::label: return IB_ERR_LABEL;
    case Errc::missing_rephrase: return IB_ERR_MISSING_REPHRASE;
    case Errc::invalid_fold_count: return IB_ERR_INVALID_FOLD_COUNT;
    case Errc::config: return IB_ERR_CONFIG;
    case Errc::empty_batch: return IB_ERR_EMPTY_BATCH;
    case Errc::decode: return IB_ERR_DECODE;
    case Errc::vocab: return IB_ERR_VOCAB;
    case Errc::numerics: return IB_ERR_NUMERICS;
    case Errc::state: return IB_ERR_STATE;
    case Errc::schema: return IB_ERR_SCHEMA;
    case Errc::io: return IB_ERR_IO;
    case Errc::missing_artifact: return IB_ERR_MISSING_ARTIFACT;
  }
  return IB_ERR_INTERNAL;
}

ib_status fail_with(ib_status status, const std::string& message) {
  last_error = message;
  return status;
}

template <typename F>
ib_status guarded(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const Error& e) {
    return fail_with(status_of(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail_with(IB_ERR_INVALID_ARGUMENT, std::string("bad request: ") + e.what());
  } catch (const std::bad_alloc&) {
    return fail_with(IB_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail_with(IB_ERR_INTERNAL, e.what());
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

ib_status copy_ids(const std::vector<std::int32_t>& src, std::int32_t* dst, size_t capacity, size_t* length) {
  if (length) *length = src.size();
  if (src.size() > capacity || (!dst && !src.empty()))
    return fail_with(IB_ERR_BUFFER_TOO_SMALL, "need room for " + std::to_string(src.size()) + " ids");
  std::copy(src.begin(), src.end(), dst);
  return IB_OK;
}

ojson parse_request(const char* request) {
  if (!request) throw Error(Errc::config, "request is NULL");
  return ojson::parse(request);
}

ib_status respond(const ojson& body, char** response, ib_status status = IB_OK) {
  if (response) *response = copy_string(body.dump(2));
  return status;
}

std::optional<std::string> opt_string(const ojson& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<std::string>();
}

}  // namespace

extern "C" {

const char* ib_version(void) { return "0.1.0"; }

const char* ib_status_name(ib_status status) {
  switch (status) {
    case IB_OK: return "ok";
    case IB_ERR_EMPTY_TEXT: return "EmptyText";
    case IB_ERR_PARSE: return "ParseError";
    case IB_ERR_LABEL: return "LabelError";
    case IB_ERR_MISSING_REPHRASE: return "MissingRephrase";
    case IB_ERR_INVALID_FOLD_COUNT: return "InvalidFoldCount";
    case IB_ERR_CONFIG: return "ConfigError";
    case IB_ERR_EMPTY_BATCH: return "EmptyBatch";
    case IB_ERR_DECODE: return "DecodeError";
    case IB_ERR_VOCAB: return "VocabError";
    case IB_ERR_NUMERICS: return "NumericsError";
    case IB_ERR_STATE: return "StateError";
    case IB_ERR_SCHEMA: return "SchemaError";
    case IB_ERR_IO: return "IOError";
    case IB_ERR_MISSING_ARTIFACT: return "MissingArtifact";
    case IB_PARTIAL: return "PartialReport";
    case IB_ERR_INVALID_ARGUMENT: return "InvalidArgument";
    case IB_ERR_BUFFER_TOO_SMALL: return "BufferTooSmall";
    case IB_ERR_INTERNAL: return "InternalError";
  }
  return "unknown";
}

const char* ib_last_error(void) { return last_error.c_str(); }

void ib_string_free(char* s) { std::free(s); }

ib_status ib_normalize(const char* raw, char** normalized) {
  return guarded([&] {
    if (!raw || !normalized) return fail_with(IB_ERR_INVALID_ARGUMENT, "NULL argument");
    *normalized = copy_string(normalize_text(raw));
    return IB_OK;
  });
}

ib_status ib_encode(const char* text, size_t max_seq_len, int32_t* ids, size_t capacity, size_t* length) {
  return guarded([&] {
    if (!text) return fail_with(IB_ERR_INVALID_ARGUMENT, "text is NULL");
    return copy_ids(encode(text, max_seq_len).ids, ids, capacity, length);
  });
}

ib_status ib_encode_pair(const char* text_a, const char* text_b, size_t max_seq_len, int32_t* ids,
                         int32_t* segment_ids, size_t capacity, size_t* length) {
  return guarded([&] {
    if (!text_a || !text_b) return fail_with(IB_ERR_INVALID_ARGUMENT, "text is NULL");
    const auto enc = encode_pair(text_a, text_b, max_seq_len);
    const ib_status s = copy_ids(enc.ids, ids, capacity, length);
    if (s != IB_OK) return s;
    if (segment_ids) std::copy(enc.segment_ids.begin(), enc.segment_ids.end(), segment_ids);
    return IB_OK;
  });
}

ib_status ib_decode(const int32_t* ids, size_t count, char** text) {
  return guarded([&] {
    if ((!ids && count) || !text) return fail_with(IB_ERR_INVALID_ARGUMENT, "NULL argument");
    *text = copy_string(decode(std::vector<std::int32_t>(ids, ids + count)));
    return IB_OK;
  });
}

ib_status ib_tokenize_line(const char* line, size_t max_seq_len, int pair, int32_t* ids, size_t capacity,
                           size_t* length) {
  return guarded([&] {
    if (!line) return fail_with(IB_ERR_INVALID_ARGUMENT, "line is NULL");
    return copy_ids(app::tokenize_line(line, max_seq_len, pair != 0), ids, capacity, length);
  });
}

ib_status ib_task_score(const char* task, const int32_t* preds, const int32_t* golds, size_t examples,
                        double* score) {
  return guarded([&] {
    if (!task || !score || ((!preds || !golds) && examples))
      return fail_with(IB_ERR_INVALID_ARGUMENT, "NULL argument");
    const TaskKind kind = parse_task_kind(task);
    if (kind == TaskKind::task_b) {
      std::vector<Sublabels> p(examples), g(examples);
      for (size_t i = 0; i < examples; ++i)
        for (size_t j = 0; j < kNumSublabels; ++j) {
          const auto pv = preds[i * kNumSublabels + j], gv = golds[i * kNumSublabels + j];
          if ((pv != 0 && pv != 1) || (gv != 0 && gv != 1)) return fail_with(IB_ERR_LABEL, "labels must be 0 or 1");
          p[i][j] = static_cast<std::uint8_t>(pv);
          g[i][j] = static_cast<std::uint8_t>(gv);
        }
      *score = task_b_score(p, g);
      return IB_OK;
    }
    const std::vector<int> p(preds, preds + examples), g(golds, golds + examples);
    *score = kind == TaskKind::task_a ? task_a_score(p, g) : task_c_score(p, g);
    return IB_OK;
  });
}

ib_status ib_model_load(const char* checkpoint_path, ib_model** model) {
  return guarded([&] {
    if (!checkpoint_path || !model) return fail_with(IB_ERR_INVALID_ARGUMENT, "NULL argument");
    *model = new ib_model{load_checkpoint(checkpoint_path)};
    return IB_OK;
  });
}

void ib_model_free(ib_model* model) { delete model; }

size_t ib_model_num_classes(const ib_model* model) { return model ? num_classes(model->model.head) : 0; }

ib_status ib_model_predict(const ib_model* model, const char* text_a, const char* text_b, double* probabilities,
                           size_t capacity) {
  return guarded([&] {
    if (!model || !text_a || !probabilities) return fail_with(IB_ERR_INVALID_ARGUMENT, "NULL argument");
    const auto& m = model->model;
    const bool pair = m.head == HeadKind::pair;
    if (pair != (text_b != nullptr))
      return fail_with(IB_ERR_INVALID_ARGUMENT, pair ? "pair head needs text_b" : "single-sentence head takes no text_b");
    const size_t classes = num_classes(m.head);
    if (capacity < classes) return fail_with(IB_ERR_BUFFER_TOO_SMALL, "need room for " + std::to_string(classes));
    Sample s;
    s.id = "input";
    s.input = pair ? encode_pair(normalize_text(text_a), normalize_text(text_b), m.config.max_seq_len)
                   : encode(normalize_text(text_a), m.config.max_seq_len);
    const Matrix p = predict_proba(m, std::span<const Sample>(&s, 1));
    for (size_t c = 0; c < classes; ++c) probabilities[c] = p(0, static_cast<Eigen::Index>(c));
    return IB_OK;
  });
}

ib_status ib_train(const char* request, char** response) {
  return guarded([&] {
    const auto req = parse_request(request);
    const auto config = app::load_run_config(req.at("config").get<std::string>(), req.value("overrides", ojson::object()));
    return respond(app::cmd_train(config), response);
  });
}

ib_status ib_kfold(const char* request, char** response) {
  return guarded([&] {
    const auto req = parse_request(request);
    const auto config = app::load_run_config(req.at("config").get<std::string>(), req.value("overrides", ojson::object()));
    const auto result = app::cmd_kfold(config);
    if (result.partial) last_error = "some runs failed; see the failed list";
    return respond(result.summary, response, result.partial ? IB_PARTIAL : IB_OK);
  });
}

ib_status ib_predict(const char* request, char** response) {
  return guarded([&] {
    const auto req = parse_request(request);
    app::PredictOptions o;
    o.run_dir = req.at("run_dir").get<std::string>();
    o.test_path = req.at("test").get<std::string>();
    if (auto f = opt_string(req, "format")) o.format = parse_data_format(*f);
    if (auto l = opt_string(req, "language")) o.language = parse_language(*l);
    if (auto m = opt_string(req, "mode")) o.mode = *m;
    o.key = opt_string(req, "key");
    if (req.contains("best_per_fold") && !req["best_per_fold"].is_null()) o.best_per_fold = req["best_per_fold"].get<bool>();
    if (auto a = opt_string(req, "average")) {
      if (*a != "probabilities" && *a != "logits") throw Error(Errc::config, "average must be probabilities or logits");
      o.average = *a == "logits" ? AverageMode::logits : AverageMode::probabilities;
    }
    if (auto out = opt_string(req, "out_dir")) o.out_dir = *out;
    return respond(app::cmd_predict(o), response);
  });
}

ib_status ib_evaluate(const char* request, char** response) {
  return guarded([&] {
    const auto req = parse_request(request);
    app::EvaluateOptions o;
    o.predictions = req.at("predictions").get<std::string>();
    o.gold = req.at("gold").get<std::string>();
    if (auto f = opt_string(req, "gold_format")) o.gold_format = parse_data_format(*f);
    if (auto l = opt_string(req, "language")) o.language = parse_language(*l);
    if (auto t = opt_string(req, "task")) o.task = parse_task_kind(*t);
    if (auto v = opt_string(req, "macro_variant")) {
      if (*v != "six_labels" && *v != "with_none") throw Error(Errc::config, "macro_variant must be six_labels or with_none");
      o.macro_variant = *v == "with_none" ? MacroVariant::with_none : MacroVariant::six_labels;
    }
    return respond(app::cmd_evaluate(o), response);
  });
}

ib_status ib_stats(const char* request, char** response) {
  return guarded([&] {
    const auto req = parse_request(request);
    const auto format = opt_string(req, "format");
    const auto language = opt_string(req, "language");
    return respond(app::cmd_stats(req.at("data").get<std::string>(),
                                  format ? parse_data_format(*format) : DataFormat::jsonl,
                                  language ? parse_language(*language) : Language::en, req.value("reference", false)),
                   response);
  });
}

ib_status ib_gradcheck(const char* request, char** response) {
  return guarded([&] {
    const auto req = request ? parse_request(request) : ojson::object();
    GradCheckOptions o;
    o.seed = req.value("seed", o.seed);
    o.step = req.value("step", o.step);
    o.coordinates_per_group = req.value("coordinates", o.coordinates_per_group);
    ModelConfig config = grad_check_config();
    if (req.contains("model")) {
      // Start from the tiny configuration and apply the given fields.
      ojson merged = to_json(config);
      merged.update(req["model"]);
      config = model_config_from_json(merged);
    }
    return respond(app::cmd_gradcheck(o, config), response);
  });
}

}  // extern "C"
