#pragma once

#include <functional>
#include <unordered_map>

#include "ne/losses.hpp"
#include "ne/inference.hpp"

namespace ne {

struct TrainConfig {
  int64_t max_steps = 2000;
  int64_t batch_tokens = 256;
  double lr_peak = 5e-4;
  int64_t warmup_steps = 500;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.98;
  double adam_eps = 1e-8;
  double weight_decay = 0.01;
  double label_smoothing = 0.0;
  uint64_t seed = 1;
  OracleConfig oracle;
  LossReduction reduction = LossReduction::Mean;
  bool rollin_sample = false;  // roll-in uses sampled instead of greedy predictions
  int64_t checkpoint_every = 200;
};

// Linear from 1e-7 at step 1 to lr_peak at step warmup_steps, then
// lr_peak * sqrt(warmup_steps / step).
double lr_schedule(int64_t step, const TrainConfig& cfg);

struct AdamState {
  std::vector<std::vector<float>> m, v;
  int64_t t = 0;
};

// One Adam step with decoupled weight decay.
void adam_update(ModelParams& params, ModelParams& grads, AdamState& state, double lr,
                 const TrainConfig& cfg);

struct PolicyCounters {
  int64_t neighbor_neighbor = 0;
  int64_t neighbor_target = 0;
  int64_t target_target = 0;
  int64_t missing_neighbor = 0;
  int64_t clipped_plh = 0;

  PolicyCounters& operator+=(const PolicyCounters& o) {
    neighbor_neighbor += o.neighbor_neighbor;
    neighbor_target += o.neighbor_target;
    target_target += o.target_target;
    missing_neighbor += o.missing_neighbor;
    clipped_plh += o.clipped_plh;
    return *this;
  }
};

struct BatchItem {
  const ParallelPair* pair = nullptr;
  const IdSeq* neighbor = nullptr;  // null = no neighbor retrieved for this pair
};

// u is sampled once per batch; the beta test runs per instance. Roll-in uses
// the current parameters, gradient-free. Returns the batch loss (token-count
// weighted means per head under Mean reduction).
LossBreakdown train_step(ModelParams& params, AdamState& opt, const std::vector<BatchItem>& batch,
                         const TrainConfig& cfg, Rng& rng, int64_t step,
                         PolicyCounters* counters);

// Token-budget batches over length-sorted pairs; order reshuffled per epoch.
std::vector<std::vector<size_t>> make_batches(const std::vector<ParallelPair>& pairs,
                                              int64_t batch_tokens);

using EvalHook = std::function<double(const ModelParams&, int64_t step)>;
using CheckpointHook = std::function<void(const ModelParams&, int64_t step, double metric)>;
using LogHook = std::function<void(int64_t step, double lr, const LossBreakdown&,
                                   const PolicyCounters&)>;

struct TrainResult {
  ModelParams best_params;
  int64_t best_step = 0;
  double best_metric = 0;
};

// Runs max_steps of train_step, evaluating and checkpointing every
// checkpoint_every steps (and at the last step); returns the parameters with
// the best evaluation metric. Aborts on non-finite loss.
TrainResult train_loop(const std::vector<ParallelPair>& pairs,
                       const std::unordered_map<int32_t, IdSeq>& neighbors,
                       const ModelConfig& mcfg, const TrainConfig& cfg, const EvalHook& eval,
                       const CheckpointHook& save, const LogHook& log);

}  // namespace ne
