#include "ne/inference.hpp"

#include <chrono>
#include <iostream>

namespace ne {

namespace {

// argmax with smallest-index tie-break
template <typename Row>
Eigen::Index row_argmax(const Row& row) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < row.size(); ++j)
    if (row(j) > row(best)) best = j;
  return best;
}

template <typename Row>
Eigen::Index row_sample(const Row& row, Eigen::Index begin, Rng& rng) {
  float m = row(begin);
  for (Eigen::Index j = begin; j < row.size(); ++j) m = std::max(m, row(j));
  double z = 0;
  for (Eigen::Index j = begin; j < row.size(); ++j) z += std::exp(static_cast<double>(row(j)) - m);
  double r = rng.uniform() * z;
  for (Eigen::Index j = begin; j < row.size(); ++j) {
    r -= std::exp(static_cast<double>(row(j)) - m);
    if (r <= 0) return j;
  }
  return row.size() - 1;
}

}  // namespace

ModelDecider::ModelDecider(const ModelParams& params, const IdSeq& source, bool sample, Rng* rng)
    : params_(params), enc_(encode(params, source)), sample_(sample), rng_(rng) {
  if (sample_ && rng_ == nullptr) fail("sampling decisions require an rng");
}

DeletionMask ModelDecider::decide_deletion(const Canvas& c) {
  const MatT<float> h = decode(params_, c, enc_);
  const MatT<float> logits = deletion_logits(params_, h);
  DeletionMask m;
  m.keep.resize(static_cast<size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    if (sample_) {
      m.keep[static_cast<size_t>(i)] = row_sample(logits.row(i), 0, *rng_) == 1;
    } else {
      // ties keep the token
      m.keep[static_cast<size_t>(i)] = logits(i, 1) >= logits(i, 0);
    }
  }
  return m;
}

PlaceholderPlan ModelDecider::decide_placeholders(const Canvas& c) {
  const MatT<float> h = decode(params_, c, enc_);
  const MatT<float> logits = placeholder_logits(params_, h);
  PlaceholderPlan p;
  p.counts.resize(static_cast<size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const Eigen::Index k = sample_ ? row_sample(logits.row(i), 0, *rng_) : row_argmax(logits.row(i));
    p.counts[static_cast<size_t>(i)] = static_cast<int32_t>(k);
  }
  return p;
}

TokenFill ModelDecider::decide_fill(const Canvas& c) {
  const auto positions = c.placeholder_positions();
  TokenFill f;
  if (positions.empty()) return f;
  const MatT<float> h = decode(params_, c, enc_);
  const MatT<float> logits = token_logits(params_, h, c, positions);
  if (logits.cols() <= kNumSpecials) fail("no non-special tokens available for fill");
  f.tokens.resize(positions.size());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best;
    if (sample_) {
      best = row_sample(logits.row(i), kNumSpecials, *rng_);
    } else {
      best = kNumSpecials + row_argmax(logits.row(i).tail(logits.cols() - kNumSpecials));
    }
    f.tokens[static_cast<size_t>(i)] = static_cast<TokenId>(best);
  }
  return f;
}

std::pair<Canvas, InitKind> select_init(double score, const IdSeq& neighbor_target, double beta) {
  if (score > beta && !neighbor_target.empty())
    return {Canvas::wrap(neighbor_target), InitKind::Neighbor};
  return {Canvas(), InitKind::Empty};
}

Canvas decode_iteration(EditDecider& decider, const Canvas& c, const InferConfig& cfg,
                        IterationRecord* record, int64_t* truncated) {
  if (record != nullptr) record->before = c;

  const Canvas after_del = apply_deletion(c, decider.decide_deletion(c));
  if (record != nullptr) record->after_del = after_del;

  PlaceholderPlan plan = decider.decide_placeholders(after_del);
  for (auto& cnt : plan.counts) cnt = std::min(cnt, cfg.k_max);
  // truncate from the right so the canvas never exceeds max_positions
  int64_t budget = static_cast<int64_t>(cfg.max_positions) -
                   static_cast<int64_t>(after_del.size()) - plan.total();
  if (budget < 0) {
    if (truncated != nullptr)
      *truncated += -budget;
    else
      std::cerr << "warning: insertion plan truncated by " << -budget
                << " placeholders to fit max_positions\n";
  }
  for (size_t g = plan.counts.size(); budget < 0 && g-- > 0;) {
    const int32_t cut = static_cast<int32_t>(std::min<int64_t>(plan.counts[g], -budget));
    plan.counts[g] -= cut;
    budget += cut;
  }
  const Canvas after_plh = apply_placeholder_insertion(after_del, plan, cfg.k_max);
  if (record != nullptr) record->after_plh = after_plh;

  const Canvas after_fill = apply_token_fill(after_plh, decider.decide_fill(after_plh));
  if (record != nullptr) record->after_fill = after_fill;
  return after_fill;
}

GenerationTrace generate(EditDecider& decider, const Canvas& init, InitKind kind,
                         const InferConfig& cfg, double retrieval_ms) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  GenerationTrace trace;
  trace.init_kind = kind;
  trace.retrieval_ms = retrieval_ms;
  Canvas canvas = init;
  for (int32_t it = 1; it <= cfg.max_iterations; ++it) {
    IterationRecord rec;
    const Canvas next = decode_iteration(decider, canvas, cfg, cfg.keep_steps ? &rec : nullptr,
                                         &trace.truncated_insertions);
    if (cfg.keep_steps) trace.steps.push_back(std::move(rec));
    trace.iterations = it;
    const bool fixed_point = next == canvas;
    canvas = next;
    if (fixed_point) break;
  }
  trace.output = canvas.interior();
  trace.latency_ms =
      std::chrono::duration<double, std::milli>(clock::now() - t0).count() + retrieval_ms;
  return trace;
}

}  // namespace ne
