#include "ne/training.hpp"

#include <algorithm>
#include <cmath>

namespace ne {

double lr_schedule(int64_t step, const TrainConfig& cfg) {
  if (step < 1) fail("lr_schedule: step must be >= 1");
  constexpr double kFloor = 1e-7;
  const int64_t warmup = cfg.warmup_steps;
  if (step <= warmup) {
    if (warmup == 1) return cfg.lr_peak;
    const double frac = static_cast<double>(step - 1) / static_cast<double>(warmup - 1);
    return kFloor + (cfg.lr_peak - kFloor) * frac;
  }
  return cfg.lr_peak * std::sqrt(static_cast<double>(warmup) / static_cast<double>(step));
}

void adam_update(ModelParams& params, ModelParams& grads, AdamState& state, double lr,
                 const TrainConfig& cfg) {
  auto prefs = named_tensors(params);
  auto grefs = named_tensors(grads);
  if (state.m.empty()) {
    state.m.resize(prefs.size());
    state.v.resize(prefs.size());
    for (size_t i = 0; i < prefs.size(); ++i) {
      state.m[i].assign(static_cast<size_t>(prefs[i].size), 0.0f);
      state.v[i].assign(static_cast<size_t>(prefs[i].size), 0.0f);
    }
  }
  state.t += 1;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (size_t i = 0; i < prefs.size(); ++i) {
    float* p = prefs[i].data;
    const float* g = grefs[i].data;
    float* m = state.m[i].data();
    float* v = state.v[i].data();
    for (int64_t j = 0; j < prefs[i].size; ++j) {
      const double gj = g[j];
      const double mj = b1 * m[j] + (1.0 - b1) * gj;
      const double vj = b2 * v[j] + (1.0 - b2) * gj * gj;
      m[j] = static_cast<float>(mj);
      v[j] = static_cast<float>(vj);
      const double mhat = mj / bc1;
      const double vhat = vj / bc2;
      const double update = mhat / (std::sqrt(vhat) + cfg.adam_eps) + cfg.weight_decay * p[j];
      p[j] = static_cast<float>(p[j] - lr * update);
    }
  }
}

LossBreakdown train_step(ModelParams& params, AdamState& opt, const std::vector<BatchItem>& batch,
                         const TrainConfig& cfg, Rng& rng, int64_t step,
                         PolicyCounters* counters) {
  if (batch.empty()) fail("train_step: empty batch");
  const double u = rng.uniform();

  struct Prepared {
    TrainingInstance inst;
    const IdSeq* source;
  };
  std::vector<Prepared> prepared;
  prepared.reserve(batch.size());
  InstanceLoss totals;

  for (const auto& item : batch) {
    const ParallelPair& pair = *item.pair;
    Rng inst_rng = Rng(cfg.seed).fork(static_cast<uint64_t>(pair.id) * 0x10001ull +
                                      static_cast<uint64_t>(step));
    PolicyChoice policy{PolicySide::Target, PolicySide::Target};
    if (item.neighbor != nullptr && !item.neighbor->empty()) {
      const double sim = token_overlap_sim(*item.neighbor, pair.target);
      policy = choose_policy(u, sim, cfg.oracle);
    } else if (counters != nullptr) {
      counters->missing_neighbor += 1;
    }
    if (counters != nullptr) {
      if (policy.deletion == PolicySide::Neighbor && policy.insertion == PolicySide::Neighbor)
        counters->neighbor_neighbor += 1;
      else if (policy.deletion == PolicySide::Neighbor)
        counters->neighbor_target += 1;
      else
        counters->target_target += 1;
    }
    ModelDecider rollin(params, pair.source, cfg.rollin_sample,
                        cfg.rollin_sample ? &inst_rng : nullptr);
    Prepared p;
    p.inst = make_training_instance(pair, item.neighbor, &rollin, policy, inst_rng);
    p.source = &pair.source;
    totals.del_count += static_cast<int64_t>(p.inst.del_labels.keep.size());
    totals.plh_count += static_cast<int64_t>(p.inst.plh_labels.counts.size());
    totals.tok_count += static_cast<int64_t>(p.inst.tok_labels.tokens.size());
    prepared.push_back(std::move(p));
  }

  LossWeights w;
  if (cfg.reduction == LossReduction::Mean) {
    w.del = totals.del_count > 0 ? 1.0 / static_cast<double>(totals.del_count) : 0.0;
    w.plh = totals.plh_count > 0 ? 1.0 / static_cast<double>(totals.plh_count) : 0.0;
    w.tok = totals.tok_count > 0 ? 1.0 / static_cast<double>(totals.tok_count) : 0.0;
  }

  ModelParams grads = zeros_like(params);
  Rng drop_rng = Rng(cfg.seed ^ 0x9e3779b97f4a7c15ull).fork(static_cast<uint64_t>(step));
  DropoutCtx drop{params.cfg.dropout, params.cfg.dropout > 0 ? &drop_rng : nullptr};
  InstanceLoss sums;
  for (const auto& p : prepared) {
    EncoderActs<float> enc_acts = encoder_forward(params, *p.source, drop);
    sums += instance_loss(params, p.inst, enc_acts, w, cfg.label_smoothing, drop, &grads);
  }
  if (counters != nullptr) counters->clipped_plh += sums.clipped_plh;

  LossBreakdown out;
  if (cfg.reduction == LossReduction::Mean) {
    out.del_loss = sums.del_sum * w.del;
    out.plh_loss = sums.plh_sum * w.plh;
    out.tok_loss = sums.tok_sum * w.tok;
  } else {
    out.del_loss = sums.del_sum;
    out.plh_loss = sums.plh_sum;
    out.tok_loss = sums.tok_sum;
  }
  out.total = out.del_loss + out.plh_loss + out.tok_loss;
  out.del_count = sums.del_count;
  out.plh_count = sums.plh_count;
  out.tok_count = sums.tok_count;
  out.clipped_plh = sums.clipped_plh;

  adam_update(params, grads, opt, lr_schedule(step, cfg), cfg);
  return out;
}

std::vector<std::vector<size_t>> make_batches(const std::vector<ParallelPair>& pairs,
                                              int64_t batch_tokens) {
  std::vector<size_t> order(pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (pairs[a].target.size() != pairs[b].target.size())
      return pairs[a].target.size() < pairs[b].target.size();
    return pairs[a].id < pairs[b].id;
  });
  std::vector<std::vector<size_t>> batches;
  std::vector<size_t> cur;
  int64_t cur_tokens = 0;
  for (size_t idx : order) {
    const int64_t cost = static_cast<int64_t>(
        std::max(pairs[idx].source.size(), pairs[idx].target.size()) + 2);
    if (!cur.empty() && cur_tokens + cost > batch_tokens) {
      batches.push_back(std::move(cur));
      cur.clear();
      cur_tokens = 0;
    }
    cur.push_back(idx);
    cur_tokens += cost;
  }
  if (!cur.empty()) batches.push_back(std::move(cur));
  return batches;
}

TrainResult train_loop(const std::vector<ParallelPair>& pairs,
                       const std::unordered_map<int32_t, IdSeq>& neighbors,
                       const ModelConfig& mcfg, const TrainConfig& cfg, const EvalHook& eval,
                       const CheckpointHook& save, const LogHook& log) {
  if (pairs.empty()) fail("train_loop: empty corpus");
  ModelParams params = init_params<float>(mcfg, cfg.seed);
  AdamState opt;
  TrainResult result;
  result.best_params = params;
  result.best_step = 0;
  result.best_metric = eval ? eval(params, 0) : 0.0;
  if (save) save(params, 0, result.best_metric);

  const auto batches = make_batches(pairs, cfg.batch_tokens);
  Rng order_rng(cfg.seed ^ 0xa5a5a5a5a5a5a5a5ull);
  std::vector<size_t> batch_order(batches.size());
  for (size_t i = 0; i < batch_order.size(); ++i) batch_order[i] = i;

  Rng step_rng(cfg.seed);
  size_t cursor = batches.size();  // forces a shuffle before the first step
  for (int64_t step = 1; step <= cfg.max_steps; ++step) {
    if (cursor >= batches.size()) {
      for (size_t i = batch_order.size(); i > 1; --i) {
        const size_t j = static_cast<size_t>(order_rng.uniform_below(i));
        std::swap(batch_order[i - 1], batch_order[j]);
      }
      cursor = 0;
    }
    const auto& batch_idx = batches[batch_order[cursor++]];
    std::vector<BatchItem> batch;
    batch.reserve(batch_idx.size());
    for (size_t idx : batch_idx) {
      BatchItem item;
      item.pair = &pairs[idx];
      auto it = neighbors.find(pairs[idx].id);
      item.neighbor = it == neighbors.end() ? nullptr : &it->second;
      batch.push_back(item);
    }
    PolicyCounters counters;
    const LossBreakdown loss = train_step(params, opt, batch, cfg, step_rng, step, &counters);
    if (!std::isfinite(loss.total))
      fail("training diverged: non-finite loss at step " + std::to_string(step));
    if (log) log(step, lr_schedule(step, cfg), loss, counters);

    const bool eval_now = (cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0) ||
                          step == cfg.max_steps;
    if (eval_now) {
      const double metric = eval ? eval(params, step) : 0.0;
      if (save) save(params, step, metric);
      // without an eval hook the latest parameters win; ties keep the earliest
      if (!eval || metric > result.best_metric) {
        result.best_params = params;
        result.best_step = step;
        result.best_metric = metric;
      }
    }
  }
  return result;
}

}  // namespace ne
