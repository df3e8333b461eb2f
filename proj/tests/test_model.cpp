#include <doctest.h>

#include "ne/model.hpp"

using namespace ne;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.d_model = 8;
  cfg.d_hidden = 16;
  cfg.n_head = 2;
  cfg.n_layer = 1;
  cfg.k_max = 4;
  cfg.vocab_size = 16;
  cfg.max_positions = 32;
  cfg.dropout = 0.0;
  return cfg;
}

IdSeq seq(std::initializer_list<TokenId> ids) { return IdSeq(ids); }

}  // namespace

TEST_CASE("init is deterministic and BERT-like") {
  const ModelConfig cfg = tiny_config();
  ModelParams a = init_params<float>(cfg, 5);
  ModelParams b = init_params<float>(cfg, 5);
  ModelParams c = init_params<float>(cfg, 6);
  auto ra = named_tensors(a), rb = named_tensors(b), rc = named_tensors(c);
  bool any_differs_across_seeds = false;
  for (size_t i = 0; i < ra.size(); ++i) {
    for (int64_t j = 0; j < ra[i].size; ++j) {
      CHECK(ra[i].data[j] == rb[i].data[j]);
      if (ra[i].data[j] != rc[i].data[j]) any_differs_across_seeds = true;
    }
  }
  CHECK(any_differs_across_seeds);

  CHECK(a.head_del.rows() == cfg.d_model);
  CHECK(a.head_del.cols() == 2);
  CHECK(a.head_plh.rows() == 2 * cfg.d_model);
  CHECK(a.head_plh.cols() == cfg.k_max + 1);
  CHECK(a.head_tok.cols() == cfg.vocab_size);

  // biases zero, gains one, weights truncated at +-2 sigma
  for (const auto& t : ra) {
    for (int64_t j = 0; j < t.size; ++j) {
      switch (t.kind) {
        case TensorKind::Bias: CHECK(t.data[j] == 0.0f); break;
        case TensorKind::Gain: CHECK(t.data[j] == 1.0f); break;
        case TensorKind::Weight: CHECK(std::abs(t.data[j]) <= 0.04f); break;
      }
    }
  }
}

TEST_CASE("init sample mean near zero on a large block") {
  ModelConfig cfg = tiny_config();
  cfg.vocab_size = 12500;  // 12500 x 8 = 1e5 elements
  ModelParams p = init_params<float>(cfg, 3);
  double mean = 0;
  for (Eigen::Index i = 0; i < p.token_embedding.size(); ++i)
    mean += p.token_embedding.data()[i];
  mean /= static_cast<double>(p.token_embedding.size());
  CHECK(std::abs(mean) < 1e-3);
}

TEST_CASE("encode/decode shapes and determinism") {
  const ModelConfig cfg = tiny_config();
  const ModelParams p = init_params<float>(cfg, 1);
  const IdSeq source = seq({5, 6, 7});
  const MatT<float> enc = encode(p, source);
  CHECK(enc.rows() == 3);
  CHECK(enc.cols() == cfg.d_model);

  const MatT<float> enc2 = encode(p, source);
  CHECK((enc - enc2).cwiseAbs().maxCoeff() == 0.0f);  // dropout off => bit-deterministic

  // position embeddings active: permuting tokens changes outputs
  const MatT<float> enc_perm = encode(p, seq({7, 6, 5}));
  CHECK((enc - enc_perm).cwiseAbs().maxCoeff() > 0.0f);

  const Canvas canvas = Canvas::wrap(seq({8, 9}));
  const MatT<float> h = decode(p, canvas, enc);
  CHECK(h.rows() == 4);
  CHECK(h.cols() == cfg.d_model);

  const MatT<float> h_min = decode(p, Canvas(), enc);
  CHECK(h_min.rows() == 2);

  IdSeq too_long(cfg.max_positions + 1, 5);
  CHECK_THROWS(encode(p, too_long));
}

TEST_CASE("decoder is bidirectional") {
  const ModelConfig cfg = tiny_config();
  const ModelParams p = init_params<float>(cfg, 2);
  const MatT<float> enc = encode(p, seq({5}));
  const Canvas a = Canvas::wrap(seq({6, 7, 8, 9}));
  const Canvas b = Canvas::wrap(seq({6, 7, 8, 10}));  // change near the right edge
  const MatT<float> ha = decode(p, a, enc);
  const MatT<float> hb = decode(p, b, enc);
  // state at position 1 (left) must feel the change at position 4 (right)
  CHECK((ha.row(1) - hb.row(1)).cwiseAbs().maxCoeff() > 0.0f);
}

TEST_CASE("head logits shapes and softmax normalization") {
  const ModelConfig cfg = tiny_config();
  const ModelParams p = init_params<float>(cfg, 4);
  const MatT<float> enc = encode(p, seq({5, 6}));

  const MatT<float> h_empty = decode(p, Canvas(), enc);
  CHECK(deletion_logits(p, h_empty).rows() == 0);
  CHECK(placeholder_logits(p, h_empty).rows() == 1);
  CHECK(placeholder_logits(p, h_empty).cols() == cfg.k_max + 1);

  const Canvas c = Canvas::wrap(seq({7, 8, 9}));
  const MatT<float> h = decode(p, c, enc);
  const MatT<float> del = deletion_logits(p, h);
  CHECK(del.rows() == 3);
  for (Eigen::Index i = 0; i < del.rows(); ++i) {
    const double z = std::exp(del(i, 0)) + std::exp(del(i, 1));
    const double p0 = std::exp(del(i, 0)) / z, p1 = std::exp(del(i, 1)) / z;
    CHECK(p0 + p1 == doctest::Approx(1.0).epsilon(1e-6));
  }

  const Canvas with_plh(seq({kBos, 7, kPlh, 8, kPlh, kEos}));
  const MatT<float> h2 = decode(p, with_plh, enc);
  const auto positions = with_plh.placeholder_positions();
  const MatT<float> tok = token_logits(p, h2, with_plh, positions);
  CHECK(tok.rows() == 2);
  CHECK(tok.cols() == cfg.vocab_size);
  CHECK(token_logits(p, h2, with_plh, {}).rows() == 0);
  CHECK_THROWS(token_logits(p, h2, with_plh, {1}));  // position 1 holds a real token
}

TEST_CASE("zero heads produce uniform probabilities") {
  const ModelConfig cfg = tiny_config();
  ModelParams p = init_params<float>(cfg, 4);
  p.head_del.setZero();
  p.head_plh.setZero();
  const MatT<float> enc = encode(p, seq({5}));
  const Canvas c = Canvas::wrap(seq({7, 8}));
  const MatT<float> h = decode(p, c, enc);
  const MatT<float> del = deletion_logits(p, h);
  CHECK(del.cwiseAbs().maxCoeff() == 0.0f);  // equal logits -> 0.5/0.5
  const MatT<float> plh = placeholder_logits(p, h);
  CHECK(plh.cwiseAbs().maxCoeff() == 0.0f);  // uniform over k_max+1
}

TEST_CASE("tied token head equals embedding dot product") {
  ModelConfig cfg = tiny_config();
  cfg.tie_token_head = true;
  const ModelParams p = init_params<float>(cfg, 8);
  const MatT<float> enc = encode(p, seq({5}));
  const Canvas c(seq({kBos, kPlh, kEos}));
  const MatT<float> h = decode(p, c, enc);
  const MatT<float> tok = token_logits(p, h, c, c.placeholder_positions());
  for (int32_t t = 0; t < cfg.vocab_size; ++t) {
    const float expected = h.row(1).dot(p.token_embedding.row(t));
    CHECK(tok(0, t) == doctest::Approx(expected).epsilon(1e-5));
  }
}

TEST_CASE("logits stay finite under extreme embeddings") {
  const ModelConfig cfg = tiny_config();
  ModelParams p = init_params<float>(cfg, 9);
  p.token_embedding *= 1000.0f;
  const MatT<float> enc = encode(p, seq({5, 6, 7}));
  const Canvas c = Canvas::wrap(seq({8, 9, 10}));
  const MatT<float> h = decode(p, c, enc);
  CHECK(h.allFinite());
  CHECK(deletion_logits(p, h).allFinite());
  CHECK(placeholder_logits(p, h).allFinite());
}

TEST_CASE("interior permutation equivariance with zeroed position embeddings") {
  const ModelConfig cfg = tiny_config();
  ModelParams p = init_params<float>(cfg, 10);
  p.position_embedding.setZero();
  const MatT<float> enc = encode(p, seq({5}));
  const Canvas a = Canvas::wrap(seq({6, 7, 8}));
  const Canvas b = Canvas::wrap(seq({8, 6, 7}));
  const MatT<float> ha = decode(p, a, enc);
  const MatT<float> hb = decode(p, b, enc);
  // permutation of interior tokens permutes interior states identically
  CHECK((ha.row(1) - hb.row(2)).cwiseAbs().maxCoeff() < 1e-5f);
  CHECK((ha.row(2) - hb.row(3)).cwiseAbs().maxCoeff() < 1e-5f);
  CHECK((ha.row(3) - hb.row(1)).cwiseAbs().maxCoeff() < 1e-5f);
  CHECK((ha.row(0) - hb.row(0)).cwiseAbs().maxCoeff() < 1e-5f);
}

TEST_CASE("published-scale hyperparameters are valid config inputs") {
  ModelConfig cfg;
  cfg.d_model = 512;
  cfg.d_hidden = 2048;
  cfg.n_head = 8;
  cfg.n_layer = 6;
  cfg.k_max = 255;
  cfg.vocab_size = 64;
  cfg.max_positions = 128;
  cfg.validate();
  ModelParams p = allocate_params<float>(cfg);
  CHECK(p.head_plh.rows() == 1024);
  CHECK(p.head_plh.cols() == 256);
  CHECK(p.enc_layers.size() == 6);
  CHECK(p.dec_layers.size() == 6);
  CHECK(p.dec_layers[0].ffn.w1.w.rows() == 512);
  CHECK(p.dec_layers[0].ffn.w1.w.cols() == 2048);
}
