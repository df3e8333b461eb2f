#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ne/edit_env.hpp"
#include "ne/model_config.hpp"

namespace ne {

template <typename T>
using MatT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using VecT = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

template <typename T>
struct LinearP {
  MatT<T> w;  // in x out
  VecT<T> b;  // out
};

template <typename T>
struct LayerNormP {
  VecT<T> gain;
  VecT<T> bias;
};

template <typename T>
struct AttentionP {
  LinearP<T> q, k, v, o;
};

template <typename T>
struct FfnP {
  LinearP<T> w1, w2;
};

template <typename T>
struct EncoderLayerP {
  LayerNormP<T> ln_attn;
  AttentionP<T> attn;
  LayerNormP<T> ln_ffn;
  FfnP<T> ffn;
};

template <typename T>
struct DecoderLayerP {
  LayerNormP<T> ln_self;
  AttentionP<T> self_attn;
  LayerNormP<T> ln_cross;
  AttentionP<T> cross_attn;
  LayerNormP<T> ln_ffn;
  FfnP<T> ffn;
};

// Shared token embedding feeds both encoder and decoder; one decoder stack
// serves all three heads.
template <typename T>
struct ModelParamsT {
  ModelConfig cfg;
  MatT<T> token_embedding;     // vocab x d_model
  MatT<T> position_embedding;  // max_positions x d_model
  std::vector<EncoderLayerP<T>> enc_layers;
  std::vector<DecoderLayerP<T>> dec_layers;
  LayerNormP<T> enc_ln_final;
  LayerNormP<T> dec_ln_final;
  MatT<T> head_del;  // d_model x 2
  MatT<T> head_plh;  // 2*d_model x (k_max+1)
  MatT<T> head_tok;  // d_model x vocab (ignored when cfg.tie_token_head)
};

using ModelParams = ModelParamsT<float>;

enum class TensorKind { Weight, Bias, Gain };

template <typename T>
struct TensorRef {
  std::string name;
  T* data;
  std::vector<int64_t> dims;
  int64_t size;
  TensorKind kind;
};

template <typename T>
std::vector<TensorRef<T>> named_tensors(ModelParamsT<T>& p);

// Allocates tensors per cfg (uninitialized contents).
template <typename T>
ModelParamsT<T> allocate_params(const ModelConfig& cfg);

// BERT-style init: weights ~ truncated normal(0, 0.02^2) at +-2 sigma,
// biases zero, layer-norm gains one. Deterministic given seed.
template <typename T>
ModelParamsT<T> init_params(const ModelConfig& cfg, uint64_t seed);

// Same shapes, all zeros; used for gradients.
template <typename T>
ModelParamsT<T> zeros_like(const ModelParamsT<T>& p);

template <typename T, typename U>
ModelParamsT<U> cast_params(const ModelParamsT<T>& p);

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

struct DropoutCtx {
  double rate = 0.0;
  Rng* rng = nullptr;  // null or rate 0 = evaluation mode
  bool active() const { return rng != nullptr && rate > 0.0; }
};

template <typename T>
struct LayerNormCache {
  MatT<T> in;
  MatT<T> normed;  // (x - mean) * inv_std, pre-gain
  VecT<T> inv_std;
};

template <typename T>
struct DropCache {
  std::vector<uint8_t> keep;  // empty = dropout inactive
  T scale = 1;
};

template <typename T>
struct AttnCache {
  MatT<T> q_in;   // post-layernorm queries input
  MatT<T> kv_in;  // key/value input (same as q_in for self-attention)
  MatT<T> q, k, v;
  std::vector<MatT<T>> probs;  // per head, L x S
  MatT<T> ctx;                 // concatenated head outputs
};

template <typename T>
struct SublayerCache {
  LayerNormCache<T> ln;
  DropCache<T> drop;
};

template <typename T>
struct FfnCache {
  MatT<T> in;      // post-layernorm
  MatT<T> pre_act; // before relu
};

template <typename T>
struct EncoderActs {
  IdSeq tokens;
  MatT<T> x0;
  DropCache<T> emb_drop;
  struct Layer {
    MatT<T> attn_res_in;
    SublayerCache<T> attn_sub;
    AttnCache<T> attn;
    MatT<T> ffn_res_in;
    SublayerCache<T> ffn_sub;
    FfnCache<T> ffn;
  };
  std::vector<Layer> layers;
  LayerNormCache<T> ln_final;
  MatT<T> out;
};

template <typename T>
struct DecoderActs {
  IdSeq tokens;
  MatT<T> x0;
  DropCache<T> emb_drop;
  struct Layer {
    MatT<T> self_res_in;
    SublayerCache<T> self_sub;
    AttnCache<T> self_attn;
    MatT<T> cross_res_in;
    SublayerCache<T> cross_sub;
    AttnCache<T> cross_attn;
    MatT<T> ffn_res_in;
    SublayerCache<T> ffn_sub;
    FfnCache<T> ffn;
  };
  std::vector<Layer> layers;
  LayerNormCache<T> ln_final;
  MatT<T> out;
};

template <typename T>
EncoderActs<T> encoder_forward(const ModelParamsT<T>& p, const IdSeq& source, DropoutCtx drop);

template <typename T>
DecoderActs<T> decoder_forward(const ModelParamsT<T>& p, const Canvas& canvas,
                               const MatT<T>& enc_out, DropoutCtx drop);

// Backpropagates d_out through the decoder; accumulates parameter gradients
// and returns the gradient w.r.t. the encoder output.
template <typename T>
MatT<T> decoder_backward(const ModelParamsT<T>& p, const DecoderActs<T>& acts,
                         const MatT<T>& d_out, ModelParamsT<T>& grads);

template <typename T>
void encoder_backward(const ModelParamsT<T>& p, const EncoderActs<T>& acts,
                      const MatT<T>& d_out, ModelParamsT<T>& grads);

// Evaluation-mode convenience wrappers (no dropout, no caches kept).
template <typename T>
MatT<T> encode(const ModelParamsT<T>& p, const IdSeq& source);

template <typename T>
MatT<T> decode(const ModelParamsT<T>& p, const Canvas& canvas, const MatT<T>& enc_out);

// ---------------------------------------------------------------------------
// Policy heads. h holds one decoder state per canvas position.
// ---------------------------------------------------------------------------

// (n-1) x 2 logits over interior positions; column 0 = delete, 1 = keep.
template <typename T>
MatT<T> deletion_logits(const ModelParamsT<T>& p, const MatT<T>& h);

// n x (k_max+1) logits over gaps, from concatenated adjacent states.
template <typename T>
MatT<T> placeholder_logits(const ModelParamsT<T>& p, const MatT<T>& h);

// One row of vocabulary logits per listed placeholder position.
template <typename T>
MatT<T> token_logits(const ModelParamsT<T>& p, const MatT<T>& h, const Canvas& canvas,
                     const std::vector<size_t>& plh_positions);

// Head backwards: accumulate head parameter gradients and add the state
// gradient into d_h (same shape as h).
template <typename T>
void deletion_logits_backward(const ModelParamsT<T>& p, const MatT<T>& h,
                              const MatT<T>& d_logits, MatT<T>& d_h, ModelParamsT<T>& grads);

template <typename T>
void placeholder_logits_backward(const ModelParamsT<T>& p, const MatT<T>& h,
                                 const MatT<T>& d_logits, MatT<T>& d_h, ModelParamsT<T>& grads);

template <typename T>
void token_logits_backward(const ModelParamsT<T>& p, const MatT<T>& h,
                           const std::vector<size_t>& plh_positions, const MatT<T>& d_logits,
                           MatT<T>& d_h, ModelParamsT<T>& grads);

// ---------------------------------------------------------------------------
// Implementation
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
constexpr T kLayerNormEps = static_cast<T>(1e-5);

template <typename T>
MatT<T> linear_fwd(const MatT<T>& x, const LinearP<T>& p) {
  MatT<T> y = x * p.w;
  y.rowwise() += p.b.transpose();
  return y;
}

// Returns dx; accumulates dW and db.
template <typename T>
MatT<T> linear_bwd(const MatT<T>& x, const LinearP<T>& p, const MatT<T>& dy, LinearP<T>& g) {
  g.w.noalias() += x.transpose() * dy;
  g.b.noalias() += dy.colwise().sum().transpose();
  return dy * p.w.transpose();
}

template <typename T>
MatT<T> layernorm_fwd(const MatT<T>& x, const LayerNormP<T>& p, LayerNormCache<T>& cache) {
  const auto rows = x.rows();
  const auto cols = x.cols();
  cache.in = x;
  cache.normed.resize(rows, cols);
  cache.inv_std.resize(rows);
  MatT<T> y(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const T mean = x.row(i).mean();
    const T var = (x.row(i).array() - mean).square().mean();
    const T inv_std = T(1) / std::sqrt(var + kLayerNormEps<T>);
    cache.inv_std(i) = inv_std;
    cache.normed.row(i) = ((x.row(i).array() - mean) * inv_std).matrix();
    y.row(i) = (cache.normed.row(i).array() * p.gain.transpose().array() +
                p.bias.transpose().array())
                   .matrix();
  }
  return y;
}

template <typename T>
MatT<T> layernorm_bwd(const LayerNormP<T>& p, const LayerNormCache<T>& cache, const MatT<T>& dy,
                      LayerNormP<T>& g) {
  const auto rows = dy.rows();
  const auto cols = dy.cols();
  MatT<T> dx(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    g.gain.array() += (dy.row(i).array() * cache.normed.row(i).array()).transpose();
    g.bias.array() += dy.row(i).transpose().array();
    Eigen::Array<T, 1, Eigen::Dynamic> dnormed =
        dy.row(i).array() * p.gain.transpose().array();
    const T mean_dn = dnormed.mean();
    const T mean_dn_n = (dnormed * cache.normed.row(i).array()).mean();
    dx.row(i) = ((dnormed - mean_dn - cache.normed.row(i).array() * mean_dn_n) *
                 cache.inv_std(i))
                    .matrix();
    (void)cols;
  }
  return dx;
}

template <typename T>
void dropout_fwd(MatT<T>& x, DropoutCtx drop, DropCache<T>& cache) {
  if (!drop.active()) {
    cache.keep.clear();
    cache.scale = T(1);
    return;
  }
  cache.keep.resize(static_cast<size_t>(x.size()));
  cache.scale = static_cast<T>(1.0 / (1.0 - drop.rate));
  T* data = x.data();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const bool keep = drop.rng->uniform() >= drop.rate;
    cache.keep[static_cast<size_t>(i)] = keep;
    data[i] = keep ? data[i] * cache.scale : T(0);
  }
}

template <typename T>
void dropout_bwd(MatT<T>& dx, const DropCache<T>& cache) {
  if (cache.keep.empty()) return;
  T* data = dx.data();
  for (Eigen::Index i = 0; i < dx.size(); ++i)
    data[i] = cache.keep[static_cast<size_t>(i)] ? data[i] * cache.scale : T(0);
}

template <typename T>
MatT<T> attention_fwd(const AttentionP<T>& p, const MatT<T>& q_in, const MatT<T>& kv_in,
                      int n_head, AttnCache<T>& cache) {
  cache.q_in = q_in;
  cache.kv_in = kv_in;
  cache.q = linear_fwd(q_in, p.q);
  cache.k = linear_fwd(kv_in, p.k);
  cache.v = linear_fwd(kv_in, p.v);
  const Eigen::Index L = q_in.rows();
  const Eigen::Index S = kv_in.rows();
  const Eigen::Index d = cache.q.cols();
  const Eigen::Index hd = d / n_head;
  const T scale = T(1) / std::sqrt(static_cast<T>(hd));
  cache.probs.assign(static_cast<size_t>(n_head), MatT<T>());
  cache.ctx.resize(L, d);
  for (int h = 0; h < n_head; ++h) {
    auto qh = cache.q.middleCols(h * hd, hd);
    auto kh = cache.k.middleCols(h * hd, hd);
    auto vh = cache.v.middleCols(h * hd, hd);
    MatT<T> scores = qh * kh.transpose() * scale;  // L x S
    MatT<T>& probs = cache.probs[static_cast<size_t>(h)];
    probs.resize(L, S);
    for (Eigen::Index i = 0; i < L; ++i) {
      const T m = scores.row(i).maxCoeff();
      Eigen::Array<T, 1, Eigen::Dynamic> e = (scores.row(i).array() - m).exp();
      probs.row(i) = (e / e.sum()).matrix();
    }
    cache.ctx.middleCols(h * hd, hd).noalias() = probs * vh;
  }
  return linear_fwd(cache.ctx, p.o);
}

// Returns d_q_in; adds the key/value-path gradient into d_kv_in.
template <typename T>
MatT<T> attention_bwd(const AttentionP<T>& p, const AttnCache<T>& cache, int n_head,
                      const MatT<T>& d_out, AttentionP<T>& g, MatT<T>& d_kv_in) {
  MatT<T> d_ctx = linear_bwd(cache.ctx, p.o, d_out, g.o);
  const Eigen::Index d = cache.q.cols();
  const Eigen::Index hd = d / n_head;
  const T scale = T(1) / std::sqrt(static_cast<T>(hd));
  MatT<T> dq = MatT<T>::Zero(cache.q.rows(), d);
  MatT<T> dk = MatT<T>::Zero(cache.k.rows(), d);
  MatT<T> dv = MatT<T>::Zero(cache.v.rows(), d);
  for (int h = 0; h < n_head; ++h) {
    auto qh = cache.q.middleCols(h * hd, hd);
    auto kh = cache.k.middleCols(h * hd, hd);
    auto vh = cache.v.middleCols(h * hd, hd);
    const MatT<T>& probs = cache.probs[static_cast<size_t>(h)];
    auto d_ctx_h = d_ctx.middleCols(h * hd, hd);
    MatT<T> d_probs = d_ctx_h * vh.transpose();  // L x S
    dv.middleCols(h * hd, hd).noalias() = probs.transpose() * d_ctx_h;
    MatT<T> d_scores(probs.rows(), probs.cols());
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
      const T dot = (d_probs.row(i).array() * probs.row(i).array()).sum();
      d_scores.row(i) = probs.row(i).array() * (d_probs.row(i).array() - dot);
    }
    dq.middleCols(h * hd, hd).noalias() = d_scores * kh * scale;
    dk.middleCols(h * hd, hd).noalias() = d_scores.transpose() * qh * scale;
  }
  MatT<T> d_q_in = linear_bwd(cache.q_in, p.q, dq, g.q);
  d_kv_in.noalias() += linear_bwd(cache.kv_in, p.k, dk, g.k);
  d_kv_in.noalias() += linear_bwd(cache.kv_in, p.v, dv, g.v);
  return d_q_in;
}

template <typename T>
MatT<T> ffn_fwd(const FfnP<T>& p, const MatT<T>& x, FfnCache<T>& cache) {
  cache.in = x;
  cache.pre_act = linear_fwd(x, p.w1);
  MatT<T> act = cache.pre_act.array().max(T(0)).matrix();
  return linear_fwd(act, p.w2);
}

template <typename T>
MatT<T> ffn_bwd(const FfnP<T>& p, const FfnCache<T>& cache, const MatT<T>& dy, FfnP<T>& g) {
  MatT<T> act = cache.pre_act.array().max(T(0)).matrix();
  MatT<T> d_act = linear_bwd(act, p.w2, dy, g.w2);
  MatT<T> d_pre =
      ((cache.pre_act.array() > T(0)).template cast<T>() * d_act.array()).matrix();
  return linear_bwd(cache.in, p.w1, d_pre, g.w1);
}

template <typename T>
MatT<T> embed_tokens(const ModelParamsT<T>& p, const IdSeq& tokens) {
  if (static_cast<int64_t>(tokens.size()) > p.cfg.max_positions)
    fail("sequence exceeds max_positions (" + std::to_string(tokens.size()) + " > " +
         std::to_string(p.cfg.max_positions) + ")");
  MatT<T> x(tokens.size(), p.cfg.d_model);
  for (size_t i = 0; i < tokens.size(); ++i) {
    const TokenId t = tokens[i];
    if (t < 0 || t >= p.cfg.vocab_size) fail("token id out of range");
    x.row(i) = p.token_embedding.row(t) + p.position_embedding.row(static_cast<Eigen::Index>(i));
  }
  return x;
}

template <typename T>
void embed_backward(const IdSeq& tokens, const MatT<T>& dx, ModelParamsT<T>& grads) {
  for (size_t i = 0; i < tokens.size(); ++i) {
    grads.token_embedding.row(tokens[i]) += dx.row(static_cast<Eigen::Index>(i));
    grads.position_embedding.row(static_cast<Eigen::Index>(i)) += dx.row(static_cast<Eigen::Index>(i));
  }
}

}  // namespace detail

template <typename T>
EncoderActs<T> encoder_forward(const ModelParamsT<T>& p, const IdSeq& source, DropoutCtx drop) {
  using namespace detail;
  EncoderActs<T> acts;
  acts.tokens = source;
  acts.x0 = embed_tokens(p, source);
  dropout_fwd(acts.x0, drop, acts.emb_drop);
  MatT<T> x = acts.x0;
  acts.layers.resize(p.enc_layers.size());
  for (size_t l = 0; l < p.enc_layers.size(); ++l) {
    const auto& lp = p.enc_layers[l];
    auto& lc = acts.layers[l];
    lc.attn_res_in = x;
    MatT<T> xn = layernorm_fwd(x, lp.ln_attn, lc.attn_sub.ln);
    MatT<T> a = attention_fwd(lp.attn, xn, xn, p.cfg.n_head, lc.attn);
    dropout_fwd(a, drop, lc.attn_sub.drop);
    x += a;
    lc.ffn_res_in = x;
    MatT<T> fn = layernorm_fwd(x, lp.ln_ffn, lc.ffn_sub.ln);
    MatT<T> f = ffn_fwd(lp.ffn, fn, lc.ffn);
    dropout_fwd(f, drop, lc.ffn_sub.drop);
    x += f;
  }
  acts.out = layernorm_fwd(x, p.enc_ln_final, acts.ln_final);
  return acts;
}

template <typename T>
void encoder_backward(const ModelParamsT<T>& p, const EncoderActs<T>& acts, const MatT<T>& d_out,
                      ModelParamsT<T>& grads) {
  using namespace detail;
  MatT<T> dx = layernorm_bwd(p.enc_ln_final, acts.ln_final, d_out, grads.enc_ln_final);
  for (size_t li = p.enc_layers.size(); li-- > 0;) {
    const auto& lp = p.enc_layers[li];
    const auto& lc = acts.layers[li];
    {
      MatT<T> df = dx;
      dropout_bwd(df, lc.ffn_sub.drop);
      MatT<T> dfn = ffn_bwd(lp.ffn, lc.ffn, df, grads.enc_layers[li].ffn);
      dx += layernorm_bwd(lp.ln_ffn, lc.ffn_sub.ln, dfn, grads.enc_layers[li].ln_ffn);
    }
    {
      MatT<T> da = dx;
      dropout_bwd(da, lc.attn_sub.drop);
      MatT<T> d_kv = MatT<T>::Zero(lc.attn.kv_in.rows(), lc.attn.kv_in.cols());
      MatT<T> d_q_in =
          attention_bwd(lp.attn, lc.attn, p.cfg.n_head, da, grads.enc_layers[li].attn, d_kv);
      MatT<T> dxn = d_q_in + d_kv;  // self-attention: same input feeds q, k, v
      dx += layernorm_bwd(lp.ln_attn, lc.attn_sub.ln, dxn, grads.enc_layers[li].ln_attn);
    }
  }
  dropout_bwd(dx, acts.emb_drop);
  embed_backward(acts.tokens, dx, grads);
}

template <typename T>
DecoderActs<T> decoder_forward(const ModelParamsT<T>& p, const Canvas& canvas,
                               const MatT<T>& enc_out, DropoutCtx drop) {
  using namespace detail;
  DecoderActs<T> acts;
  acts.tokens = canvas.tokens;
  acts.x0 = embed_tokens(p, canvas.tokens);
  dropout_fwd(acts.x0, drop, acts.emb_drop);
  MatT<T> x = acts.x0;
  acts.layers.resize(p.dec_layers.size());
  for (size_t l = 0; l < p.dec_layers.size(); ++l) {
    const auto& lp = p.dec_layers[l];
    auto& lc = acts.layers[l];
    lc.self_res_in = x;
    MatT<T> xn = layernorm_fwd(x, lp.ln_self, lc.self_sub.ln);
    MatT<T> a = attention_fwd(lp.self_attn, xn, xn, p.cfg.n_head, lc.self_attn);
    dropout_fwd(a, drop, lc.self_sub.drop);
    x += a;
    lc.cross_res_in = x;
    MatT<T> cn = layernorm_fwd(x, lp.ln_cross, lc.cross_sub.ln);
    MatT<T> c = attention_fwd(lp.cross_attn, cn, enc_out, p.cfg.n_head, lc.cross_attn);
    dropout_fwd(c, drop, lc.cross_sub.drop);
    x += c;
    lc.ffn_res_in = x;
    MatT<T> fn = layernorm_fwd(x, lp.ln_ffn, lc.ffn_sub.ln);
    MatT<T> f = ffn_fwd(lp.ffn, fn, lc.ffn);
    dropout_fwd(f, drop, lc.ffn_sub.drop);
    x += f;
  }
  acts.out = layernorm_fwd(x, p.dec_ln_final, acts.ln_final);
  return acts;
}

template <typename T>
MatT<T> decoder_backward(const ModelParamsT<T>& p, const DecoderActs<T>& acts, const MatT<T>& d_out,
                         ModelParamsT<T>& grads) {
  using namespace detail;
  MatT<T> d_enc;
  MatT<T> dx = layernorm_bwd(p.dec_ln_final, acts.ln_final, d_out, grads.dec_ln_final);
  for (size_t li = p.dec_layers.size(); li-- > 0;) {
    const auto& lp = p.dec_layers[li];
    const auto& lc = acts.layers[li];
    {
      MatT<T> df = dx;
      dropout_bwd(df, lc.ffn_sub.drop);
      MatT<T> dfn = ffn_bwd(lp.ffn, lc.ffn, df, grads.dec_layers[li].ffn);
      dx += layernorm_bwd(lp.ln_ffn, lc.ffn_sub.ln, dfn, grads.dec_layers[li].ln_ffn);
    }
    {
      MatT<T> dc = dx;
      dropout_bwd(dc, lc.cross_sub.drop);
      if (d_enc.size() == 0)
        d_enc = MatT<T>::Zero(lc.cross_attn.kv_in.rows(), lc.cross_attn.kv_in.cols());
      MatT<T> dcn = attention_bwd(lp.cross_attn, lc.cross_attn, p.cfg.n_head, dc,
                                  grads.dec_layers[li].cross_attn, d_enc);
      dx += layernorm_bwd(lp.ln_cross, lc.cross_sub.ln, dcn, grads.dec_layers[li].ln_cross);
    }
    {
      MatT<T> da = dx;
      dropout_bwd(da, lc.self_sub.drop);
      MatT<T> d_kv = MatT<T>::Zero(lc.self_attn.kv_in.rows(), lc.self_attn.kv_in.cols());
      MatT<T> d_q_in = attention_bwd(lp.self_attn, lc.self_attn, p.cfg.n_head, da,
                                     grads.dec_layers[li].self_attn, d_kv);
      MatT<T> dxn = d_q_in + d_kv;
      dx += layernorm_bwd(lp.ln_self, lc.self_sub.ln, dxn, grads.dec_layers[li].ln_self);
    }
  }
  dropout_bwd(dx, acts.emb_drop);
  embed_backward(acts.tokens, dx, grads);
  if (d_enc.size() == 0) d_enc = MatT<T>::Zero(0, p.cfg.d_model);
  return d_enc;
}

template <typename T>
MatT<T> encode(const ModelParamsT<T>& p, const IdSeq& source) {
  return encoder_forward(p, source, DropoutCtx{}).out;
}

template <typename T>
MatT<T> decode(const ModelParamsT<T>& p, const Canvas& canvas, const MatT<T>& enc_out) {
  return decoder_forward(p, canvas, enc_out, DropoutCtx{}).out;
}

template <typename T>
MatT<T> deletion_logits(const ModelParamsT<T>& p, const MatT<T>& h) {
  const Eigen::Index interior = h.rows() - 2;
  if (interior < 0) fail("deletion_logits: canvas too short");
  if (interior == 0) return MatT<T>(0, 2);
  return h.middleRows(1, interior) * p.head_del;
}

template <typename T>
void deletion_logits_backward(const ModelParamsT<T>& p, const MatT<T>& h, const MatT<T>& d_logits,
                              MatT<T>& d_h, ModelParamsT<T>& grads) {
  const Eigen::Index interior = h.rows() - 2;
  if (interior <= 0) return;
  grads.head_del.noalias() += h.middleRows(1, interior).transpose() * d_logits;
  d_h.middleRows(1, interior).noalias() += d_logits * p.head_del.transpose();
}

template <typename T>
MatT<T> placeholder_logits(const ModelParamsT<T>& p, const MatT<T>& h) {
  const Eigen::Index gaps = h.rows() - 1;
  if (gaps < 1) fail("placeholder_logits: canvas too short");
  const Eigen::Index d = h.cols();
  MatT<T> paired(gaps, 2 * d);
  paired.leftCols(d) = h.topRows(gaps);
  paired.rightCols(d) = h.bottomRows(gaps);
  return paired * p.head_plh;
}

template <typename T>
void placeholder_logits_backward(const ModelParamsT<T>& p, const MatT<T>& h,
                                 const MatT<T>& d_logits, MatT<T>& d_h, ModelParamsT<T>& grads) {
  const Eigen::Index gaps = h.rows() - 1;
  const Eigen::Index d = h.cols();
  MatT<T> paired(gaps, 2 * d);
  paired.leftCols(d) = h.topRows(gaps);
  paired.rightCols(d) = h.bottomRows(gaps);
  grads.head_plh.noalias() += paired.transpose() * d_logits;
  MatT<T> d_paired = d_logits * p.head_plh.transpose();
  d_h.topRows(gaps) += d_paired.leftCols(d);
  d_h.bottomRows(gaps) += d_paired.rightCols(d);
}

template <typename T>
MatT<T> token_logits(const ModelParamsT<T>& p, const MatT<T>& h, const Canvas& canvas,
                     const std::vector<size_t>& plh_positions) {
  MatT<T> rows(plh_positions.size(), h.cols());
  for (size_t j = 0; j < plh_positions.size(); ++j) {
    const size_t pos = plh_positions[j];
    if (pos >= canvas.tokens.size() || canvas.tokens[pos] != kPlh)
      fail("token_logits: position does not hold a placeholder");
    rows.row(static_cast<Eigen::Index>(j)) = h.row(static_cast<Eigen::Index>(pos));
  }
  if (p.cfg.tie_token_head) return rows * p.token_embedding.transpose();
  return rows * p.head_tok;
}

template <typename T>
void token_logits_backward(const ModelParamsT<T>& p, const MatT<T>& h,
                           const std::vector<size_t>& plh_positions, const MatT<T>& d_logits,
                           MatT<T>& d_h, ModelParamsT<T>& grads) {
  if (plh_positions.empty()) return;
  MatT<T> rows(plh_positions.size(), h.cols());
  for (size_t j = 0; j < plh_positions.size(); ++j)
    rows.row(static_cast<Eigen::Index>(j)) = h.row(static_cast<Eigen::Index>(plh_positions[j]));
  MatT<T> d_rows;
  if (p.cfg.tie_token_head) {
    grads.token_embedding.noalias() += d_logits.transpose() * rows;
    d_rows = d_logits * p.token_embedding;
  } else {
    grads.head_tok.noalias() += rows.transpose() * d_logits;
    d_rows = d_logits * p.head_tok.transpose();
  }
  for (size_t j = 0; j < plh_positions.size(); ++j)
    d_h.row(static_cast<Eigen::Index>(plh_positions[j])) += d_rows.row(static_cast<Eigen::Index>(j));
}

// ---------------------------------------------------------------------------
// Parameter plumbing
// ---------------------------------------------------------------------------

namespace detail {

template <typename T, typename Fn>
void visit_linear(const std::string& prefix, LinearP<T>& p, Fn&& fn) {
  fn(prefix + ".w", p.w.data(), std::vector<int64_t>{p.w.rows(), p.w.cols()}, TensorKind::Weight);
  fn(prefix + ".b", p.b.data(), std::vector<int64_t>{p.b.size()}, TensorKind::Bias);
}

template <typename T, typename Fn>
void visit_layernorm(const std::string& prefix, LayerNormP<T>& p, Fn&& fn) {
  fn(prefix + ".gain", p.gain.data(), std::vector<int64_t>{p.gain.size()}, TensorKind::Gain);
  fn(prefix + ".bias", p.bias.data(), std::vector<int64_t>{p.bias.size()}, TensorKind::Bias);
}

template <typename T, typename Fn>
void visit_attention(const std::string& prefix, AttentionP<T>& p, Fn&& fn) {
  visit_linear(prefix + ".q", p.q, fn);
  visit_linear(prefix + ".k", p.k, fn);
  visit_linear(prefix + ".v", p.v, fn);
  visit_linear(prefix + ".o", p.o, fn);
}

template <typename T, typename Fn>
void visit_ffn(const std::string& prefix, FfnP<T>& p, Fn&& fn) {
  visit_linear(prefix + ".w1", p.w1, fn);
  visit_linear(prefix + ".w2", p.w2, fn);
}

template <typename T, typename Fn>
void visit_all(ModelParamsT<T>& p, Fn&& fn) {
  fn("token_embedding", p.token_embedding.data(),
     std::vector<int64_t>{p.token_embedding.rows(), p.token_embedding.cols()}, TensorKind::Weight);
  fn("position_embedding", p.position_embedding.data(),
     std::vector<int64_t>{p.position_embedding.rows(), p.position_embedding.cols()},
     TensorKind::Weight);
  for (size_t l = 0; l < p.enc_layers.size(); ++l) {
    const std::string base = "enc." + std::to_string(l);
    visit_layernorm(base + ".ln_attn", p.enc_layers[l].ln_attn, fn);
    visit_attention(base + ".attn", p.enc_layers[l].attn, fn);
    visit_layernorm(base + ".ln_ffn", p.enc_layers[l].ln_ffn, fn);
    visit_ffn(base + ".ffn", p.enc_layers[l].ffn, fn);
  }
  for (size_t l = 0; l < p.dec_layers.size(); ++l) {
    const std::string base = "dec." + std::to_string(l);
    visit_layernorm(base + ".ln_self", p.dec_layers[l].ln_self, fn);
    visit_attention(base + ".self_attn", p.dec_layers[l].self_attn, fn);
    visit_layernorm(base + ".ln_cross", p.dec_layers[l].ln_cross, fn);
    visit_attention(base + ".cross_attn", p.dec_layers[l].cross_attn, fn);
    visit_layernorm(base + ".ln_ffn", p.dec_layers[l].ln_ffn, fn);
    visit_ffn(base + ".ffn", p.dec_layers[l].ffn, fn);
  }
  visit_layernorm("enc_ln_final", p.enc_ln_final, fn);
  visit_layernorm("dec_ln_final", p.dec_ln_final, fn);
  fn("head_del", p.head_del.data(), std::vector<int64_t>{p.head_del.rows(), p.head_del.cols()},
     TensorKind::Weight);
  fn("head_plh", p.head_plh.data(), std::vector<int64_t>{p.head_plh.rows(), p.head_plh.cols()},
     TensorKind::Weight);
  fn("head_tok", p.head_tok.data(), std::vector<int64_t>{p.head_tok.rows(), p.head_tok.cols()},
     TensorKind::Weight);
}

}  // namespace detail

template <typename T>
std::vector<TensorRef<T>> named_tensors(ModelParamsT<T>& p) {
  std::vector<TensorRef<T>> refs;
  detail::visit_all(p, [&](const std::string& name, T* data, const std::vector<int64_t>& dims,
                           TensorKind kind) {
    int64_t size = 1;
    for (int64_t d : dims) size *= d;
    refs.push_back(TensorRef<T>{name, data, dims, size, kind});
  });
  return refs;
}

template <typename T>
ModelParamsT<T> allocate_params(const ModelConfig& cfg) {
  cfg.validate();
  ModelParamsT<T> p;
  p.cfg = cfg;
  const auto d = cfg.d_model;
  p.token_embedding.resize(cfg.vocab_size, d);
  p.position_embedding.resize(cfg.max_positions, d);
  auto make_linear = [&](int in, int out) {
    LinearP<T> lp;
    lp.w.resize(in, out);
    lp.b.resize(out);
    return lp;
  };
  auto make_ln = [&]() {
    LayerNormP<T> lp;
    lp.gain.resize(d);
    lp.bias.resize(d);
    return lp;
  };
  auto make_attn = [&]() {
    AttentionP<T> ap;
    ap.q = make_linear(d, d);
    ap.k = make_linear(d, d);
    ap.v = make_linear(d, d);
    ap.o = make_linear(d, d);
    return ap;
  };
  auto make_ffn = [&]() {
    FfnP<T> fp;
    fp.w1 = make_linear(d, cfg.d_hidden);
    fp.w2 = make_linear(cfg.d_hidden, d);
    return fp;
  };
  p.enc_layers.resize(cfg.n_layer);
  for (auto& l : p.enc_layers) l = {make_ln(), make_attn(), make_ln(), make_ffn()};
  p.dec_layers.resize(cfg.n_layer);
  for (auto& l : p.dec_layers)
    l = {make_ln(), make_attn(), make_ln(), make_attn(), make_ln(), make_ffn()};
  p.enc_ln_final = make_ln();
  p.dec_ln_final = make_ln();
  p.head_del.resize(d, 2);
  p.head_plh.resize(2 * d, cfg.k_max + 1);
  p.head_tok.resize(d, cfg.vocab_size);
  return p;
}

template <typename T>
ModelParamsT<T> init_params(const ModelConfig& cfg, uint64_t seed) {
  ModelParamsT<T> p = allocate_params<T>(cfg);
  Rng rng(seed);
  for (auto& t : named_tensors(p)) {
    switch (t.kind) {
      case TensorKind::Weight:
        for (int64_t i = 0; i < t.size; ++i)
          t.data[i] = static_cast<T>(rng.truncated_normal(0.02));
        break;
      case TensorKind::Bias:
        std::fill(t.data, t.data + t.size, T(0));
        break;
      case TensorKind::Gain:
        std::fill(t.data, t.data + t.size, T(1));
        break;
    }
  }
  return p;
}

template <typename T>
ModelParamsT<T> zeros_like(const ModelParamsT<T>& p) {
  ModelParamsT<T> z = allocate_params<T>(p.cfg);
  for (auto& t : named_tensors(z)) std::fill(t.data, t.data + t.size, T(0));
  return z;
}

template <typename T, typename U>
ModelParamsT<U> cast_params(const ModelParamsT<T>& p) {
  ModelParamsT<U> out = allocate_params<U>(p.cfg);
  auto src = named_tensors(const_cast<ModelParamsT<T>&>(p));
  auto dst = named_tensors(out);
  for (size_t i = 0; i < src.size(); ++i)
    for (int64_t j = 0; j < src[i].size; ++j) dst[i].data[j] = static_cast<U>(src[i].data[j]);
  return out;
}

}  // namespace ne
