#include "ironbench/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "ironbench/error.hpp"
#include "ironbench/seed.hpp"

namespace ironbench {

void ModelConfig::validate() const {
  require(vocab_size == static_cast<std::size_t>(vocab::size), Errc::config,
          "vocab_size must be " + std::to_string(vocab::size));
  require(d_model > 0 && n_layers > 0 && n_heads > 0 && d_ff > 0, Errc::config, "model dimensions must be positive");
  require(d_model % n_heads == 0, Errc::config, "d_model must be divisible by n_heads");
  require(max_seq_len >= 4, Errc::config, "max_seq_len must be at least 4");
  require(dropout_rate >= 0.0 && dropout_rate < 1.0, Errc::config, "dropout_rate must lie in [0, 1)");
  require(n_segments == 2, Errc::config, "n_segments must be 2");
}

namespace {

template <typename S>
S gelu_t(S x) {
  return S(0.5) * x * (S(1) + std::erf(x / std::sqrt(S(2))));
}

std::string layer_prefix(std::size_t i) { return "layer" + std::to_string(i) + "."; }

template <typename T>
struct LayerRefs {
  T *wq, *bq, *wk, *bk, *wv, *bv, *wo, *bo;
  T *attn_gain, *attn_bias;
  T *w_in, *b_in, *w_out, *b_out;
  T *ffn_gain, *ffn_bias;
};

template <typename T>
struct EncoderRefs {
  T *token, *position, *segment, *embed_gain, *embed_bias;
  std::vector<LayerRefs<T>> layers;
};

template <typename T, typename Set>
EncoderRefs<T> resolve(Set& params, std::size_t n_layers) {
  EncoderRefs<T> r;
  r.token = &params.at("embed.token");
  r.position = &params.at("embed.position");
  r.segment = &params.at("embed.segment");
  r.embed_gain = &params.at("embed.norm.gain");
  r.embed_bias = &params.at("embed.norm.bias");
  for (std::size_t i = 0; i < n_layers; ++i) {
    const auto p = layer_prefix(i);
    LayerRefs<T> l;
    l.wq = &params.at(p + "attn.query.weight");
    l.bq = &params.at(p + "attn.query.bias");
    l.wk = &params.at(p + "attn.key.weight");
    l.bk = &params.at(p + "attn.key.bias");
    l.wv = &params.at(p + "attn.value.weight");
    l.bv = &params.at(p + "attn.value.bias");
    l.wo = &params.at(p + "attn.output.weight");
    l.bo = &params.at(p + "attn.output.bias");
    l.attn_gain = &params.at(p + "attn.norm.gain");
    l.attn_bias = &params.at(p + "attn.norm.bias");
    l.w_in = &params.at(p + "ffn.in.weight");
    l.b_in = &params.at(p + "ffn.in.bias");
    l.w_out = &params.at(p + "ffn.out.weight");
    l.b_out = &params.at(p + "ffn.out.bias");
    l.ffn_gain = &params.at(p + "ffn.norm.gain");
    l.ffn_bias = &params.at(p + "ffn.norm.bias");
    r.layers.push_back(l);
  }
  return r;
}

template <typename S>
using MatrixT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VectorT = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <typename S>
using RowVectorT = Eigen::Matrix<S, 1, Eigen::Dynamic>;

template <typename S>
MatrixT<S> affine(const MatrixT<S>& x, const Tensor& weight, const Tensor& bias) {
  MatrixT<S> y = x * weight.matrix().template cast<S>();
  y.rowwise() += bias.row_vector().template cast<S>();
  return y;
}

// Statistics are only cached on the double path.
template <typename S>
MatrixT<S> layer_norm(const MatrixT<S>& x, const Tensor& gain, const Tensor& bias, LayerNormCache* cache) {
  const auto d = static_cast<S>(x.cols());
  const VectorT<S> mean = x.rowwise().sum() / d;
  MatrixT<S> centered = x.colwise() - mean;
  const VectorT<S> var = centered.array().square().rowwise().sum() / d;
  const VectorT<S> inv_std = (var.array() + static_cast<S>(kLayerNormEpsilon)).rsqrt();
  MatrixT<S> normalized = centered.array().colwise() * inv_std.array();
  MatrixT<S> y = normalized.array().rowwise() * gain.row_vector().template cast<S>().array();
  y.rowwise() += bias.row_vector().template cast<S>();
  if constexpr (std::is_same_v<S, double>) {
    if (cache) {
      cache->normalized = std::move(normalized);
      cache->inv_std = inv_std;
    }
  }
  return y;
}

// dy -> dx for y = gain * normalized + bias.
Matrix layer_norm_backward(const Matrix& dy, const LayerNormCache& cache, const Tensor& gain, Tensor& d_gain,
                           Tensor& d_bias) {
  const auto d = static_cast<double>(dy.cols());
  d_gain.row_vector() += (dy.array() * cache.normalized.array()).colwise().sum().matrix();
  d_bias.row_vector() += dy.colwise().sum();
  const Matrix dxhat = dy.array().rowwise() * gain.row_vector().array();
  const Vector mean_dxhat = dxhat.rowwise().sum() / d;
  const Vector mean_dxhat_xhat = (dxhat.array() * cache.normalized.array()).rowwise().sum() / d;
  Matrix dx = dxhat;
  dx.colwise() -= mean_dxhat;
  dx -= (cache.normalized.array().colwise() * mean_dxhat_xhat.array()).matrix();
  return dx.array().colwise() * cache.inv_std.array();
}

template <typename S>
MatrixT<S> dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::mt19937_64& rng) {
  const double keep = 1.0 - rate;
  const S scale = S(1) / static_cast<S>(keep);
  MatrixT<S> mask(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      mask(i, j) = u < keep ? scale : S(0);
    }
  return mask;
}

template <typename S>
void check_finite(const MatrixT<S>& m, const std::string& where) {
  if (!m.allFinite()) fail(Errc::numerics, "non-finite activation in " + where);
}

template <typename S>
RowVectorT<S> forward_row(const EncoderRefs<const Tensor>& w, const ModelConfig& config, const Batch& batch,
                               std::size_t r, bool dropout, std::uint64_t dropout_seed, RowCache* cache) {
  // Trailing padding is never attended to, so only the prefix up to the last
  // real token is computed.
  std::size_t used = batch.width;
  while (used > 1 && !batch.valid(r, used - 1)) --used;
  const auto L = static_cast<Eigen::Index>(used);
  const auto d = static_cast<Eigen::Index>(config.d_model);
  const auto heads = config.n_heads;
  const auto dh = static_cast<Eigen::Index>(config.head_dim());
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));
  std::mt19937_64 rng(derive_seed(dropout_seed, r));

  const auto token = w.token->matrix();
  const auto position = w.position->matrix();
  const auto segment = w.segment->matrix();

  MatrixT<S> x(L, d);
  for (Eigen::Index t = 0; t < L; ++t) {
    const auto id = batch.id(r, static_cast<std::size_t>(t));
    const auto seg = batch.segment(r, static_cast<std::size_t>(t));
    x.row(t) = token.row(id).template cast<S>() + position.row(t).template cast<S>() +
               segment.row(seg).template cast<S>();
  }
  if (cache) {
    cache->ids.assign(batch.ids.begin() + static_cast<std::ptrdiff_t>(r * batch.width),
                      batch.ids.begin() + static_cast<std::ptrdiff_t>(r * batch.width + used));
    cache->segments.assign(batch.segments.begin() + static_cast<std::ptrdiff_t>(r * batch.width),
                           batch.segments.begin() + static_cast<std::ptrdiff_t>(r * batch.width + used));
    cache->mask.assign(batch.mask.begin() + static_cast<std::ptrdiff_t>(r * batch.width),
                       batch.mask.begin() + static_cast<std::ptrdiff_t>(r * batch.width + used));
  }
  MatrixT<S> h = layer_norm<S>(x, *w.embed_gain, *w.embed_bias, cache ? &cache->embed_norm : nullptr);
  if (dropout) {
    MatrixT<S> mask = dropout_mask<S>(L, d, config.dropout_rate, rng);
    h.array() *= mask.array();
    if constexpr (std::is_same_v<S, double>) {
      if (cache) cache->embed_dropout = std::move(mask);
    }
  }
  check_finite<S>(h, "embedding");

  RowVectorT<S> key_bias = RowVectorT<S>::Zero(L);
  for (Eigen::Index t = 0; t < L; ++t)
    if (!batch.valid(r, static_cast<std::size_t>(t))) key_bias(t) = -std::numeric_limits<S>::infinity();

  if (cache) cache->layers.resize(config.n_layers);
  for (std::size_t li = 0; li < config.n_layers; ++li) {
    const auto& lw = w.layers[li];
    LayerCache* lc = cache ? &cache->layers[li] : nullptr;

    MatrixT<S> q = affine<S>(h, *lw.wq, *lw.bq);
    MatrixT<S> k = affine<S>(h, *lw.wk, *lw.bk);
    MatrixT<S> v = affine<S>(h, *lw.wv, *lw.bv);
    MatrixT<S> context(L, d);
    if (lc) lc->probs.resize(heads);
    for (std::size_t hd = 0; hd < heads; ++hd) {
      const auto c0 = static_cast<Eigen::Index>(hd) * dh;
      MatrixT<S> scores = q.middleCols(c0, dh) * k.middleCols(c0, dh).transpose() * scale;
      scores.rowwise() += key_bias;
      const VectorT<S> row_max = scores.rowwise().maxCoeff();
      MatrixT<S> probs = (scores.colwise() - row_max).array().exp();
      const VectorT<S> row_sum = probs.rowwise().sum();
      probs.array().colwise() /= row_sum.array();
      context.middleCols(c0, dh).noalias() = probs * v.middleCols(c0, dh);
      if constexpr (std::is_same_v<S, double>) {
        if (lc) lc->probs[hd] = std::move(probs);
      }
    }
    MatrixT<S> attn = affine<S>(context, *lw.wo, *lw.bo);
    if (dropout) {
      MatrixT<S> mask = dropout_mask<S>(L, d, config.dropout_rate, rng);
      attn.array() *= mask.array();
      if constexpr (std::is_same_v<S, double>) {
        if (lc) lc->attn_dropout = std::move(mask);
      }
    }
    MatrixT<S> hidden = layer_norm<S>(h + attn, *lw.attn_gain, *lw.attn_bias, lc ? &lc->attn_norm : nullptr);

    MatrixT<S> pre = affine<S>(hidden, *lw.w_in, *lw.b_in);
    MatrixT<S> act = pre.unaryExpr([](S z) { return gelu_t(z); });
    MatrixT<S> ffn = affine<S>(act, *lw.w_out, *lw.b_out);
    if (dropout) {
      MatrixT<S> mask = dropout_mask<S>(L, d, config.dropout_rate, rng);
      ffn.array() *= mask.array();
      if constexpr (std::is_same_v<S, double>) {
        if (lc) lc->ffn_dropout = std::move(mask);
      }
    }
    MatrixT<S> out = layer_norm<S>(hidden + ffn, *lw.ffn_gain, *lw.ffn_bias, lc ? &lc->ffn_norm : nullptr);
    check_finite<S>(out, "layer " + std::to_string(li));

    if constexpr (std::is_same_v<S, double>) {
      if (lc) {
        lc->input = std::move(h);
        lc->query = std::move(q);
        lc->key = std::move(k);
        lc->value = std::move(v);
        lc->context = std::move(context);
        lc->hidden = std::move(hidden);
        lc->ffn_pre = std::move(pre);
        lc->ffn_act = std::move(act);
      }
    }
    h = std::move(out);
  }
  return h.row(0);
}

void backward_row(const EncoderRefs<const Tensor>& w, EncoderRefs<Tensor>& g, const ModelConfig& config,
                  const RowCache& rc, const Eigen::RowVectorXd& grad_cls) {
  const auto L = static_cast<Eigen::Index>(rc.ids.size());
  const auto d = static_cast<Eigen::Index>(config.d_model);
  const auto dh = static_cast<Eigen::Index>(config.head_dim());
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix dh_out = Matrix::Zero(L, d);
  dh_out.row(0) = grad_cls;

  for (std::size_t li = config.n_layers; li-- > 0;) {
    const auto& lw = w.layers[li];
    auto& lg = g.layers[li];
    const auto& lc = rc.layers[li];

    Matrix d_sum2 = layer_norm_backward(dh_out, lc.ffn_norm, *lw.ffn_gain, *lg.ffn_gain, *lg.ffn_bias);
    Matrix d_hidden = d_sum2;
    Matrix d_ffn = lc.ffn_dropout.size() ? Matrix(d_sum2.array() * lc.ffn_dropout.array()) : d_sum2;

    lg.w_out->matrix().noalias() += lc.ffn_act.transpose() * d_ffn;
    lg.b_out->row_vector() += d_ffn.colwise().sum();
    Matrix d_act = d_ffn * lw.w_out->matrix().transpose();
    Matrix d_pre = d_act.array() * lc.ffn_pre.unaryExpr([](double z) { return gelu_derivative(z); }).array();
    lg.w_in->matrix().noalias() += lc.hidden.transpose() * d_pre;
    lg.b_in->row_vector() += d_pre.colwise().sum();
    d_hidden.noalias() += d_pre * lw.w_in->matrix().transpose();

    Matrix d_sum1 = layer_norm_backward(d_hidden, lc.attn_norm, *lw.attn_gain, *lg.attn_gain, *lg.attn_bias);
    Matrix d_input = d_sum1;
    Matrix d_attn = lc.attn_dropout.size() ? Matrix(d_sum1.array() * lc.attn_dropout.array()) : d_sum1;

    lg.wo->matrix().noalias() += lc.context.transpose() * d_attn;
    lg.bo->row_vector() += d_attn.colwise().sum();
    Matrix d_context = d_attn * lw.wo->matrix().transpose();

    Matrix dq(L, d), dk(L, d), dv(L, d);
    for (std::size_t hd = 0; hd < config.n_heads; ++hd) {
      const auto c0 = static_cast<Eigen::Index>(hd) * dh;
      const Matrix& probs = lc.probs[hd];
      const auto dctx = d_context.middleCols(c0, dh);
      Matrix d_probs = dctx * lc.value.middleCols(c0, dh).transpose();
      dv.middleCols(c0, dh).noalias() = probs.transpose() * dctx;
      const Vector inner = (d_probs.array() * probs.array()).rowwise().sum();
      Matrix d_scores = probs.array() * (d_probs.colwise() - inner).array();
      dq.middleCols(c0, dh).noalias() = d_scores * lc.key.middleCols(c0, dh) * scale;
      dk.middleCols(c0, dh).noalias() = d_scores.transpose() * lc.query.middleCols(c0, dh) * scale;
    }
    lg.wq->matrix().noalias() += lc.input.transpose() * dq;
    lg.bq->row_vector() += dq.colwise().sum();
    lg.wk->matrix().noalias() += lc.input.transpose() * dk;
    lg.bk->row_vector() += dk.colwise().sum();
    lg.wv->matrix().noalias() += lc.input.transpose() * dv;
    lg.bv->row_vector() += dv.colwise().sum();
    d_input.noalias() += dq * lw.wq->matrix().transpose();
    d_input.noalias() += dk * lw.wk->matrix().transpose();
    d_input.noalias() += dv * lw.wv->matrix().transpose();
    dh_out = std::move(d_input);
  }

  if (rc.embed_dropout.size()) dh_out.array() *= rc.embed_dropout.array();
  const Matrix dx = layer_norm_backward(dh_out, rc.embed_norm, *w.embed_gain, *g.embed_gain, *g.embed_bias);
  auto token = g.token->matrix();
  auto position = g.position->matrix();
  auto segment = g.segment->matrix();
  for (Eigen::Index t = 0; t < L; ++t) {
    token.row(rc.ids[static_cast<std::size_t>(t)]) += dx.row(t);
    position.row(t) += dx.row(t);
    segment.row(rc.segments[static_cast<std::size_t>(t)]) += dx.row(t);
  }
}

}  // namespace

double gelu(double x) noexcept { return gelu_t(x); }

double gelu_derivative(double x) noexcept {
  constexpr double inv_sqrt_2pi = 0.39894228040143267794;
  return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) + x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

ParamSet init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ParamSet params;
  const auto d = config.d_model;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.02);
  auto weight = [&](const std::string& name, std::vector<std::size_t> shape) {
    auto& t = params.add(name, std::move(shape));
    for (auto& x : t.data) x = normal(rng);
  };
  auto gain = [&](const std::string& name) {
    auto& t = params.add(name, {d});
    std::fill(t.data.begin(), t.data.end(), 1.0);
  };
  weight("embed.token", {config.vocab_size, d});
  weight("embed.position", {config.max_seq_len, d});
  weight("embed.segment", {config.n_segments, d});
  gain("embed.norm.gain");
  params.add("embed.norm.bias", {d});
  for (std::size_t i = 0; i < config.n_layers; ++i) {
    const auto p = layer_prefix(i);
    for (const char* proj : {"query", "key", "value", "output"}) {
      weight(p + "attn." + proj + ".weight", {d, d});
      params.add(p + "attn." + proj + ".bias", {d});
    }
    gain(p + "attn.norm.gain");
    params.add(p + "attn.norm.bias", {d});
    weight(p + "ffn.in.weight", {d, config.d_ff});
    params.add(p + "ffn.in.bias", {config.d_ff});
    weight(p + "ffn.out.weight", {config.d_ff, d});
    params.add(p + "ffn.out.bias", {d});
    gain(p + "ffn.norm.gain");
    params.add(p + "ffn.norm.bias", {d});
  }
  return params;
}

EncoderOutput forward_cls(const ParamSet& params, const ModelConfig& config, const Batch& batch, Mode mode,
                          std::uint64_t dropout_seed) {
  config.validate();
  if (batch.rows == 0) fail(Errc::empty_batch, "forward_cls on an empty batch");
  require(batch.width <= config.max_seq_len, Errc::config,
          "batch width " + std::to_string(batch.width) + " exceeds max_seq_len");
  for (std::size_t i = 0; i < batch.ids.size(); ++i) {
    if (batch.ids[i] < 0 || static_cast<std::size_t>(batch.ids[i]) >= config.vocab_size)
      fail(Errc::vocab, "token id " + std::to_string(batch.ids[i]) + " is outside the vocabulary");
    if (batch.segments[i] < 0 || static_cast<std::size_t>(batch.segments[i]) >= config.n_segments)
      fail(Errc::vocab, "segment id " + std::to_string(batch.segments[i]) + " is out of range");
  }
  for (std::size_t r = 0; r < batch.rows; ++r)
    require(batch.valid(r, 0), Errc::state, "row " + std::to_string(r) + " has a padded [CLS] position");

  const auto refs = resolve<const Tensor>(params, config.n_layers);
  const bool training = mode == Mode::train;
  const bool dropout = training && config.dropout_rate > 0.0;

  EncoderOutput out;
  out.cls.resize(static_cast<Eigen::Index>(batch.rows), static_cast<Eigen::Index>(config.d_model));
  if (training) {
    out.cache.emplace();
    out.cache->config = config;
    out.cache->parameter_count = params.parameter_count();
    out.cache->rows.resize(batch.rows);
  }
  for (std::size_t r = 0; r < batch.rows; ++r)
    out.cls.row(static_cast<Eigen::Index>(r)) =
        forward_row<double>(refs, config, batch, r, dropout, dropout_seed,
                                 training ? &out.cache->rows[r] : nullptr);
  return out;
}

void backward(const ParamSet& params, const ForwardCache& cache, const Matrix& grad_cls, ParamSet& grads) {
  const auto& config = cache.config;
  require(params.parameter_count() == cache.parameter_count, Errc::state, "cache was produced by other parameters");
  require(grads.same_layout(params), Errc::state, "gradient layout differs from parameters");
  require(static_cast<std::size_t>(grad_cls.rows()) == cache.rows.size() &&
              static_cast<std::size_t>(grad_cls.cols()) == config.d_model,
          Errc::state, "grad_cls shape does not match the cached batch");
  const auto w = resolve<const Tensor>(params, config.n_layers);
  auto g = resolve<Tensor>(grads, config.n_layers);
  for (std::size_t r = 0; r < cache.rows.size(); ++r) {
    require(cache.rows[r].layers.size() == config.n_layers, Errc::state, "incomplete forward cache");
    backward_row(w, g, config, cache.rows[r], grad_cls.row(static_cast<Eigen::Index>(r)));
  }
}

ParamSet backward(const ParamSet& params, const ForwardCache& cache, const Matrix& grad_cls) {
  ParamSet grads = params.zeros_like();
  backward(params, cache, grad_cls, grads);
  return grads;
}

ModelConfig grad_check_config() {
  ModelConfig c;
  c.d_model = 16;
  c.n_layers = 2;
  c.n_heads = 2;
  c.d_ff = 32;
  c.max_seq_len = 8;
  c.dropout_rate = 0.15;
  return c;
}

GradCheckReport grad_check(const ModelConfig& config, const GradCheckOptions& options) {
  config.validate();
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  ParamSet params = init_params(config, derive_seed(options.seed, seed_stream::init));
  // Spread the weights (std 0.02 -> 0.3) so attention is far from uniform, and
  // move norms off their identity initialization.
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& name = params.name(i);
    if (name.find("norm") != std::string::npos || name.ends_with(".bias"))
      for (auto& x : params.tensor(i).data) x += 0.1 * normal(rng);
    else
      for (auto& x : params.tensor(i).data) x *= 15.0;
  }

  std::vector<EncodedInput> inputs;
  std::uniform_int_distribution<int> byte(0, 255);
  const std::size_t L = config.max_seq_len;
  for (std::size_t r = 0; r < std::max<std::size_t>(options.batch_rows, 1); ++r) {
    std::string a, b;
    if (r % 3 == 2) {
      for (std::size_t i = 0; i < (L - 3) / 2; ++i) a.push_back(static_cast<char>(byte(rng)));
      for (std::size_t i = 0; i < (L - 3) - (L - 3) / 2; ++i) b.push_back(static_cast<char>(byte(rng)));
      inputs.push_back(encode_pair(a, b, L));
    } else {
      const std::size_t len = r % 3 == 0 ? L - 2 : (L - 2) / 2;
      for (std::size_t i = 0; i < len; ++i) a.push_back(static_cast<char>(byte(rng)));
      inputs.push_back(encode(a, L));
    }
  }
  const Batch batch = pad_batch(inputs);
  Matrix projection(static_cast<Eigen::Index>(batch.rows), static_cast<Eigen::Index>(config.d_model));
  for (Eigen::Index i = 0; i < projection.size(); ++i) projection.data()[i] = normal(rng);

  const std::uint64_t dropout_seed = derive_seed(options.seed, seed_stream::dropout);
  // The numeric side runs the same forward pass in extended precision.
  auto loss = [&](const ParamSet& p) {
    const auto refs = resolve<const Tensor>(p, config.n_layers);
    long double total = 0.0L;
    for (std::size_t r = 0; r < batch.rows; ++r) {
      const auto cls = forward_row<long double>(refs, config, batch, r, config.dropout_rate > 0.0, dropout_seed, nullptr);
      total += (cls.array() * projection.row(static_cast<Eigen::Index>(r)).cast<long double>().array()).sum();
    }
    return total;
  };
  const auto out = forward_cls(params, config, batch, Mode::train, dropout_seed);
  const ParamSet analytic = backward(params, *out.cache, projection);

  std::set<std::int32_t> used_tokens(batch.ids.begin(), batch.ids.end());
  GradCheckReport report;
  for (std::size_t gi = 0; gi < params.size(); ++gi) {
    const auto& name = params.name(gi);
    auto& tensor = params.tensor(gi);
    std::vector<std::size_t> candidates;
    if (name == "embed.token") {
      for (auto id : used_tokens)
        for (std::size_t c = 0; c < config.d_model; ++c)
          candidates.push_back(static_cast<std::size_t>(id) * config.d_model + c);
    } else if (name == "embed.position") {
      for (std::size_t i = 0; i < batch.width * config.d_model; ++i) candidates.push_back(i);
    } else {
      for (std::size_t i = 0; i < tensor.size(); ++i) candidates.push_back(i);
    }
    if (candidates.size() > options.coordinates_per_group) {
      std::shuffle(candidates.begin(), candidates.end(), rng);
      candidates.resize(options.coordinates_per_group);
    }
    double worst = 0.0;
    for (const auto idx : candidates) {
      const double saved = tensor.data[idx];
      tensor.data[idx] = saved + options.step;
      const long double up = loss(params);
      tensor.data[idx] = saved - options.step;
      const long double down = loss(params);
      tensor.data[idx] = saved;
      const double numeric = static_cast<double>((up - down) / (2.0L * static_cast<long double>(options.step)));
      const double a = analytic.tensor(gi).data[idx];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      worst = std::max(worst, rel);
    }
    report.coordinates_checked += candidates.size();
    report.per_parameter.emplace_back(name, worst);
    if (worst >= report.max_rel_error) {
      report.max_rel_error = worst;
      report.worst_parameter = name;
    }
  }
  return report;
}

}  // namespace ironbench
