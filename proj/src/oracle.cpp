#include "ne/oracle.hpp"

#include <limits>

namespace ne {

DeletionMask oracle_deletion(const Canvas& y_del, const IdSeq& target) {
  const IdSeq interior = y_del.interior();
  DeletionMask mask;
  mask.keep.assign(interior.size(), 0);
  for (auto [i, j] : lcs_pairs(interior, target)) {
    (void)j;
    mask.keep[i] = 1;
  }
  return mask;
}

std::pair<PlaceholderPlan, TokenFill> oracle_insertion(const Canvas& y_ins, const IdSeq& target) {
  const IdSeq interior = y_ins.interior();
  const auto pairs = lcs_pairs(interior, target);
  if (pairs.size() != interior.size()) fail("oracle_insertion: not a subsequence");

  PlaceholderPlan plan;
  TokenFill fill;
  plan.counts.assign(y_ins.gap_count(), 0);
  size_t prev_end = 0;  // first target index not yet covered
  for (size_t k = 0; k < pairs.size(); ++k) {
    const size_t aligned = pairs[k].second;
    plan.counts[k] = static_cast<int32_t>(aligned - prev_end);
    for (size_t t = prev_end; t < aligned; ++t) fill.tokens.push_back(target[t]);
    prev_end = aligned + 1;
  }
  plan.counts.back() = static_cast<int32_t>(target.size() - prev_end);
  for (size_t t = prev_end; t < target.size(); ++t) fill.tokens.push_back(target[t]);
  return {std::move(plan), std::move(fill)};
}

Canvas delete_tokens_at_rate(const IdSeq& target, double drop_rate, Rng& rng) {
  IdSeq kept;
  kept.reserve(target.size());
  for (TokenId t : target)
    if (rng.uniform() >= drop_rate) kept.push_back(t);
  return Canvas::wrap(kept);
}

Canvas random_deletion(const IdSeq& target, Rng& rng) {
  if (target.empty()) fail("random_deletion: empty target");
  const double drop_rate = rng.uniform();
  return delete_tokens_at_rate(target, drop_rate, rng);
}

PolicyChoice choose_policy(double u, double sim_zy, const OracleConfig& cfg) {
  if (u < cfg.alpha && sim_zy > cfg.beta) return {PolicySide::Neighbor, PolicySide::Neighbor};
  if (u < cfg.alpha) return {PolicySide::Neighbor, PolicySide::Target};
  return {PolicySide::Target, PolicySide::Target};
}

TrainingInstance make_training_instance(const ParallelPair& pair,
                                        const IdSeq* neighbor_target,
                                        RollinPolicy* model,
                                        PolicyChoice policy,
                                        Rng& rng) {
  if (policy.deletion == PolicySide::Target && policy.insertion == PolicySide::Neighbor)
    fail("invalid policy combination (Target deletion, Neighbor insertion)");
  const bool needs_neighbor =
      policy.deletion == PolicySide::Neighbor || policy.insertion == PolicySide::Neighbor;
  if (needs_neighbor && (neighbor_target == nullptr || neighbor_target->empty()))
    fail("neighbor-centric policy requires a neighbor");

  const IdSeq& target = pair.target;
  TrainingInstance inst;
  inst.policy = policy;

  if (policy.insertion == PolicySide::Neighbor) {
    const Canvas z0 = Canvas::wrap(*neighbor_target);
    const DeletionMask d_tilde = model ? model->predict_deletion(z0) : oracle_deletion(z0, target);
    const Canvas kept = apply_deletion(z0, d_tilde);
    inst.ins_canvas = Canvas::wrap(common_subsequence(target, kept.interior()));
  } else {
    inst.ins_canvas = random_deletion(target, rng);
  }

  std::tie(inst.plh_labels, inst.tok_labels) = oracle_insertion(inst.ins_canvas, target);
  inst.fill_canvas = apply_placeholder_insertion(inst.ins_canvas, inst.plh_labels,
                                                 std::numeric_limits<int32_t>::max());

  if (policy.deletion == PolicySide::Neighbor) {
    inst.del_canvas = Canvas::wrap(*neighbor_target);
  } else {
    const TokenFill t_tilde = model ? model->predict_fill(inst.fill_canvas) : inst.tok_labels;
    inst.del_canvas = apply_token_fill(inst.fill_canvas, t_tilde);
  }
  inst.del_labels = oracle_deletion(inst.del_canvas, target);
  return inst;
}

}  // namespace ne
