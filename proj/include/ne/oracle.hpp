#pragma once

#include <optional>
#include <utility>

#include "ne/corpus.hpp"
#include "ne/edit_env.hpp"

namespace ne {

struct OracleConfig {
  double alpha = 0.6;  // probability of the neighbor-centric policy
  double beta = 0.3;   // similarity threshold for the insertion side
  uint64_t rnd_seed = 0;
};

enum class PolicySide { Neighbor, Target };

// Which policy labels each side of an instance. (Target, Neighbor) is
// impossible: insertion is target-centric whenever deletion is.
struct PolicyChoice {
  PolicySide deletion = PolicySide::Target;
  PolicySide insertion = PolicySide::Target;
};

// Supervised tuple the model imitates: deletion canvas with keep labels,
// insertion canvas with placeholder counts, and the placeholder-expanded
// canvas with fill labels. Applying the fill labels to fill_canvas
// reconstructs the boundary-wrapped target exactly.
struct TrainingInstance {
  Canvas del_canvas;
  DeletionMask del_labels;
  Canvas ins_canvas;
  PlaceholderPlan plh_labels;
  Canvas fill_canvas;
  TokenFill tok_labels;
  PolicyChoice policy;
};

// Keeps exactly the interior positions participating in the common
// subsequence with the target; attains the minimum Levenshtein distance to
// the target over all masks.
DeletionMask oracle_deletion(const Canvas& y_del, const IdSeq& target);

// Requires interior(y_ins) to be a subsequence of the target. Counts per gap
// cover the target tokens strictly between the aligned interior positions;
// counts are never clipped here.
std::pair<PlaceholderPlan, TokenFill> oracle_insertion(const Canvas& y_ins, const IdSeq& target);

// Deletes each token independently with probability drop_rate.
Canvas delete_tokens_at_rate(const IdSeq& target, double drop_rate, Rng& rng);

// Samples a drop rate from Uniform[0,1] and deletes each target token
// independently with that probability.
Canvas random_deletion(const IdSeq& target, Rng& rng);

PolicyChoice choose_policy(double u, double sim_zy, const OracleConfig& cfg);

// Model predictions used to roll in training canvases; gradient-free, greedy
// by default. A null policy (unit tests only) substitutes the oracle's own
// actions.
struct RollinPolicy {
  virtual ~RollinPolicy() = default;
  virtual DeletionMask predict_deletion(const Canvas& c) = 0;
  virtual TokenFill predict_fill(const Canvas& c) = 0;
};

TrainingInstance make_training_instance(const ParallelPair& pair,
                                        const IdSeq* neighbor_target,
                                        RollinPolicy* model,
                                        PolicyChoice policy,
                                        Rng& rng);

}  // namespace ne
