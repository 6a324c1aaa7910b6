#ifndef IRONBENCH_H
#define IRONBENCH_H

/* C interface of the ironbench library. Strings are UTF-8. Every call that
 * can fail returns an ib_status; on failure ib_last_error() describes the
 * problem for the calling thread. Strings handed out by the library are
 * released with ib_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define IB_API __declspec(dllexport)
#else
#define IB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ib_status {
  IB_OK = 0,
  IB_ERR_EMPTY_TEXT = 1,
  IB_ERR_PARSE = 2,
  IB_ERR_LABEL = 3,
  IB_ERR_MISSING_REPHRASE = 4,
  IB_ERR_INVALID_FOLD_COUNT = 5,
  IB_ERR_CONFIG = 6,
  IB_ERR_EMPTY_BATCH = 7,
  IB_ERR_DECODE = 8,
  IB_ERR_VOCAB = 9,
  IB_ERR_NUMERICS = 10,
  IB_ERR_STATE = 11,
  IB_ERR_SCHEMA = 12,
  IB_ERR_IO = 13,
  IB_ERR_MISSING_ARTIFACT = 14,
  IB_PARTIAL = 15, /* kfold finished with failed runs; the response is filled */
  IB_ERR_INVALID_ARGUMENT = 16,
  IB_ERR_BUFFER_TOO_SMALL = 17,
  IB_ERR_INTERNAL = 18
} ib_status;

IB_API const char* ib_version(void);
IB_API const char* ib_status_name(ib_status status);
IB_API const char* ib_last_error(void);
IB_API void ib_string_free(char* s);

/* Tokenizer. `length` receives the sequence length even when the buffer is
 * too small (then IB_ERR_BUFFER_TOO_SMALL is returned). */
IB_API ib_status ib_normalize(const char* raw, char** normalized);
IB_API ib_status ib_encode(const char* text, size_t max_seq_len, int32_t* ids, size_t capacity, size_t* length);
IB_API ib_status ib_encode_pair(const char* text_a, const char* text_b, size_t max_seq_len, int32_t* ids,
                                int32_t* segment_ids, size_t capacity, size_t* length);
IB_API ib_status ib_decode(const int32_t* ids, size_t count, char** text);
/* Whitespace-normalizes a raw line (a blank line encodes as specials only)
 * and encodes it; with `pair` set the line holds two texts split by a tab. */
IB_API ib_status ib_tokenize_line(const char* line, size_t max_seq_len, int pair, int32_t* ids, size_t capacity,
                                  size_t* length);

/* Official task score. Tasks "A" and "C" take one 0/1 per example; task "B"
 * takes 6 per example, row-major, and scores the six-label macro-F1. */
IB_API ib_status ib_task_score(const char* task, const int32_t* preds, const int32_t* golds, size_t examples,
                               double* score);

/* Trained model loaded from a checkpoint file. Safe to share between threads
 * for prediction. */
typedef struct ib_model ib_model;

IB_API ib_status ib_model_load(const char* checkpoint_path, ib_model** model);
IB_API void ib_model_free(ib_model* model);
IB_API size_t ib_model_num_classes(const ib_model* model);
/* text_b may be NULL for single-sentence heads. `probabilities` needs
 * ib_model_num_classes() entries. */
IB_API ib_status ib_model_predict(const ib_model* model, const char* text_a, const char* text_b,
                                  double* probabilities, size_t capacity);

/* Commands. Each takes a JSON request and, on IB_OK or IB_PARTIAL, returns a
 * JSON summary in *response.
 *   train, kfold: {"config": path, "overrides": {"train.seed": 7, ...}}
 *   predict:      {"run_dir", "test", "format"?, "language"?, "mode"?, "key"?,
 *                  "best_per_fold"?, "average"?, "out_dir"?}
 *   evaluate:     {"predictions", "gold", "gold_format"?, "language"?,
 *                  "task"?, "macro_variant"?}
 *   stats:        {"data", "format"?, "language"?, "reference"?}
 *   gradcheck:    {"seed"?, "step"?, "coordinates"?, "model"?} */
IB_API ib_status ib_train(const char* request, char** response);
IB_API ib_status ib_kfold(const char* request, char** response);
IB_API ib_status ib_predict(const char* request, char** response);
IB_API ib_status ib_evaluate(const char* request, char** response);
IB_API ib_status ib_stats(const char* request, char** response);
IB_API ib_status ib_gradcheck(const char* request, char** response);

#ifdef __cplusplus
}
#endif

#endif
