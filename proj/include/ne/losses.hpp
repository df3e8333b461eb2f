#pragma once

#include "ne/model.hpp"
#include "ne/oracle.hpp"

namespace ne {

// Per-head negative log-likelihood sums with label counts. The public
// LossBreakdown view normalizes these to means (or leaves sums, per config).
struct InstanceLoss {
  double del_sum = 0, plh_sum = 0, tok_sum = 0;
  int64_t del_count = 0, plh_count = 0, tok_count = 0;
  int64_t clipped_plh = 0;

  InstanceLoss& operator+=(const InstanceLoss& o) {
    del_sum += o.del_sum;
    plh_sum += o.plh_sum;
    tok_sum += o.tok_sum;
    del_count += o.del_count;
    plh_count += o.plh_count;
    tok_count += o.tok_count;
    clipped_plh += o.clipped_plh;
    return *this;
  }
};

struct LossBreakdown {
  double total = 0, del_loss = 0, plh_loss = 0, tok_loss = 0;
  int64_t del_count = 0, plh_count = 0, tok_count = 0;
  int64_t clipped_plh = 0;
};

enum class LossReduction { Mean, Sum };

inline LossBreakdown reduce_loss(const InstanceLoss& s, LossReduction r) {
  LossBreakdown b;
  const auto norm = [&](double sum, int64_t count) {
    if (r == LossReduction::Sum) return sum;
    return count > 0 ? sum / static_cast<double>(count) : 0.0;
  };
  b.del_loss = norm(s.del_sum, s.del_count);
  b.plh_loss = norm(s.plh_sum, s.plh_count);
  b.tok_loss = norm(s.tok_sum, s.tok_count);
  b.total = b.del_loss + b.plh_loss + b.tok_loss;
  b.del_count = s.del_count;
  b.plh_count = s.plh_count;
  b.tok_count = s.tok_count;
  b.clipped_plh = s.clipped_plh;
  return b;
}

// Scale applied to each head's summed NLL (and to its logit gradients),
// which is how a batch-level mean over labels is realized.
struct LossWeights {
  double del = 1.0, plh = 1.0, tok = 1.0;
};

namespace detail {

// Cross-entropy over logit rows. Returns summed NLL; when d_logits is
// non-null, writes weight * (softmax - smoothed one-hot) rows into it.
template <typename T>
double cross_entropy(const MatT<T>& logits, const std::vector<int32_t>& labels,
                     double label_smoothing, double weight, MatT<T>* d_logits) {
  const Eigen::Index rows = logits.rows();
  const Eigen::Index cols = logits.cols();
  if (static_cast<size_t>(rows) != labels.size()) fail("cross_entropy: label count mismatch");
  if (d_logits != nullptr) d_logits->setZero(rows, cols);
  double sum = 0;
  const double eps = label_smoothing;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const int32_t label = labels[static_cast<size_t>(i)];
    if (label < 0 || label >= cols) fail("cross_entropy: label out of range");
    const T m = logits.row(i).maxCoeff();
    Eigen::Array<T, 1, Eigen::Dynamic> shifted = logits.row(i).array() - m;
    const T lse = std::log(shifted.exp().sum());
    Eigen::Array<T, 1, Eigen::Dynamic> logp = shifted - lse;
    if (eps == 0.0) {
      sum += -static_cast<double>(logp(label));
    } else {
      const double uniform = -static_cast<double>(logp.sum()) / static_cast<double>(cols);
      sum += (1.0 - eps) * -static_cast<double>(logp(label)) + eps * uniform;
    }
    if (d_logits != nullptr) {
      Eigen::Array<T, 1, Eigen::Dynamic> p = logp.exp();
      Eigen::Array<T, 1, Eigen::Dynamic> q =
          Eigen::Array<T, 1, Eigen::Dynamic>::Constant(cols, static_cast<T>(eps / cols));
      q(label) += static_cast<T>(1.0 - eps);
      d_logits->row(i) = ((p - q) * static_cast<T>(weight)).matrix();
    }
  }
  return sum;
}

}  // namespace detail

inline std::vector<int32_t> deletion_class_labels(const DeletionMask& m) {
  std::vector<int32_t> out(m.keep.size());
  for (size_t i = 0; i < m.keep.size(); ++i) out[i] = m.keep[i] ? 1 : 0;
  return out;
}

// Placeholder-count labels for the classifier, clipped to k_max (the head
// cannot express larger counts). Increments *clipped per clamped gap.
inline std::vector<int32_t> placeholder_class_labels(const PlaceholderPlan& p, int32_t k_max,
                                                     int64_t* clipped) {
  std::vector<int32_t> out(p.counts.size());
  for (size_t i = 0; i < p.counts.size(); ++i) {
    if (p.counts[i] > k_max) {
      out[i] = k_max;
      if (clipped != nullptr) ++*clipped;
    } else {
      out[i] = p.counts[i];
    }
  }
  return out;
}

// Forward (and optionally backward) of the full imitation loss for one
// instance: deletion NLL on del_canvas, placeholder NLL on ins_canvas, and
// token NLL on fill_canvas, all decoded against enc_acts' source. When grads
// is non-null, parameter gradients accumulate there (encoder included).
template <typename T>
InstanceLoss instance_loss(const ModelParamsT<T>& params, const TrainingInstance& inst,
                           const EncoderActs<T>& enc_acts, const LossWeights& w,
                           double label_smoothing, DropoutCtx drop, ModelParamsT<T>* grads) {
  InstanceLoss out;
  MatT<T> d_enc_total;
  if (grads != nullptr) d_enc_total = MatT<T>::Zero(enc_acts.out.rows(), enc_acts.out.cols());

  // deletion head
  {
    DecoderActs<T> acts = decoder_forward(params, inst.del_canvas, enc_acts.out, drop);
    MatT<T> logits = deletion_logits(params, acts.out);
    const auto labels = deletion_class_labels(inst.del_labels);
    out.del_count = static_cast<int64_t>(labels.size());
    MatT<T> d_logits;
    out.del_sum = detail::cross_entropy(logits, labels, label_smoothing, w.del,
                                        grads != nullptr ? &d_logits : nullptr);
    if (grads != nullptr && out.del_count > 0) {
      MatT<T> d_h = MatT<T>::Zero(acts.out.rows(), acts.out.cols());
      deletion_logits_backward(params, acts.out, d_logits, d_h, *grads);
      d_enc_total += decoder_backward(params, acts, d_h, *grads);
    }
  }

  // placeholder head
  {
    DecoderActs<T> acts = decoder_forward(params, inst.ins_canvas, enc_acts.out, drop);
    MatT<T> logits = placeholder_logits(params, acts.out);
    const auto labels = placeholder_class_labels(inst.plh_labels, params.cfg.k_max, &out.clipped_plh);
    out.plh_count = static_cast<int64_t>(labels.size());
    MatT<T> d_logits;
    out.plh_sum = detail::cross_entropy(logits, labels, label_smoothing, w.plh,
                                        grads != nullptr ? &d_logits : nullptr);
    if (grads != nullptr) {
      MatT<T> d_h = MatT<T>::Zero(acts.out.rows(), acts.out.cols());
      placeholder_logits_backward(params, acts.out, d_logits, d_h, *grads);
      d_enc_total += decoder_backward(params, acts, d_h, *grads);
    }
  }

  // token head
  {
    DecoderActs<T> acts = decoder_forward(params, inst.fill_canvas, enc_acts.out, drop);
    const auto positions = inst.fill_canvas.placeholder_positions();
    MatT<T> logits = token_logits(params, acts.out, inst.fill_canvas, positions);
    std::vector<int32_t> labels(inst.tok_labels.tokens.begin(), inst.tok_labels.tokens.end());
    if (labels.size() != positions.size()) fail("instance_loss: fill labels mismatch");
    out.tok_count = static_cast<int64_t>(labels.size());
    MatT<T> d_logits;
    out.tok_sum = detail::cross_entropy(logits, labels, label_smoothing, w.tok,
                                        grads != nullptr ? &d_logits : nullptr);
    if (grads != nullptr && out.tok_count > 0) {
      MatT<T> d_h = MatT<T>::Zero(acts.out.rows(), acts.out.cols());
      token_logits_backward(params, acts.out, positions, d_logits, d_h, *grads);
      d_enc_total += decoder_backward(params, acts, d_h, *grads);
    }
  }

  if (grads != nullptr) encoder_backward(params, enc_acts, d_enc_total, *grads);
  return out;
}

// Spec-shaped forward-only entry: per-head means summed (or sums per flag).
template <typename T>
LossBreakdown compute_losses(const ModelParamsT<T>& params, const TrainingInstance& inst,
                             const EncoderActs<T>& enc_acts,
                             LossReduction reduction = LossReduction::Mean,
                             double label_smoothing = 0.0) {
  const InstanceLoss s = instance_loss<T>(params, inst, enc_acts, LossWeights{}, label_smoothing,
                                          DropoutCtx{}, nullptr);
  return reduce_loss(s, reduction);
}

}  // namespace ne
