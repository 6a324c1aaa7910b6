#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ironbench/tensor.hpp"
#include "ironbench/tokenizer.hpp"

namespace ironbench {

struct ModelConfig {
  std::size_t vocab_size = static_cast<std::size_t>(vocab::size);
  std::size_t d_model = 64;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t d_ff = 256;
  std::size_t max_seq_len = 128;
  double dropout_rate = 0.15;
  std::size_t n_segments = 2;

  std::size_t head_dim() const noexcept { return d_model / n_heads; }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

enum class Mode { train, eval };

inline constexpr double kLayerNormEpsilon = 1e-12;

struct LayerNormCache {
  Matrix normalized;  // (x - mean) * inv_std, before gain and bias
  Vector inv_std;
};

struct LayerCache {
  Matrix input;
  Matrix query, key, value;
  std::vector<Matrix> probs;  // one L x L matrix per head
  Matrix context;
  Matrix attn_dropout;  // empty when dropout is inactive
  LayerNormCache attn_norm;
  Matrix hidden;
  Matrix ffn_pre;
  Matrix ffn_act;
  Matrix ffn_dropout;
  LayerNormCache ffn_norm;
};

struct RowCache {
  std::vector<std::int32_t> ids;
  std::vector<std::int32_t> segments;
  std::vector<std::uint8_t> mask;
  LayerNormCache embed_norm;
  Matrix embed_dropout;
  std::vector<LayerCache> layers;
};

// Everything backward() needs; only produced in train mode.
struct ForwardCache {
  ModelConfig config;
  std::size_t parameter_count = 0;
  std::vector<RowCache> rows;
};

struct EncoderOutput {
  Matrix cls;  // rows x d_model
  std::optional<ForwardCache> cache;
};

/// Weights ~ N(0, 0.02^2) from a generator seeded with `seed`; biases zero,
/// layer-norm gains one.
ParamSet init_params(const ModelConfig& config, std::uint64_t seed);

/// Embeddings (token + position + segment), layer norm, then post-LN blocks.
/// Returns the final hidden state at position 0 of every row.
EncoderOutput forward_cls(const ParamSet& params, const ModelConfig& config, const Batch& batch, Mode mode,
                          std::uint64_t dropout_seed);

/// Adds d(loss)/d(params) into `grads` given d(loss)/d(cls).
void backward(const ParamSet& params, const ForwardCache& cache, const Matrix& grad_cls, ParamSet& grads);
ParamSet backward(const ParamSet& params, const ForwardCache& cache, const Matrix& grad_cls);

double gelu(double x) noexcept;
double gelu_derivative(double x) noexcept;

struct GradCheckOptions {
  std::uint64_t seed = 1;
  double step = 1e-5;
  std::size_t coordinates_per_group = 200;
  std::size_t batch_rows = 3;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t coordinates_checked = 0;
  std::vector<std::pair<std::string, double>> per_parameter;
};

/// Central-difference check of backward() on a random batch with a random
/// linear projection of the [CLS] outputs as loss. Relative error is
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-6).
GradCheckReport grad_check(const ModelConfig& config, const GradCheckOptions& options = {});

// The tiny configuration the gradient check is specified on.
ModelConfig grad_check_config();

}  // namespace ironbench
