#pragma once

#include <memory>

#include "ne/model.hpp"
#include "ne/oracle.hpp"

namespace ne {

struct InferConfig {
  int32_t max_iterations = 10;
  double beta = 0.3;       // below or at this retrieval score, fall back to <s></s>
  int32_t k_max = 32;      // clip on predicted placeholder counts
  int32_t max_positions = 256;
  bool keep_steps = true;  // record per-iteration canvases in the trace
};

enum class InitKind { Neighbor, Empty };

struct IterationRecord {
  Canvas before;
  Canvas after_del;
  Canvas after_plh;
  Canvas after_fill;
};

struct GenerationTrace {
  IdSeq output;
  int32_t iterations = 0;
  std::vector<IterationRecord> steps;
  InitKind init_kind = InitKind::Empty;
  double latency_ms = 0;
  double retrieval_ms = 0;
  int64_t truncated_insertions = 0;  // placeholders dropped to fit max_positions
};

// One delete / insert-placeholders / fill decision source. Implementations
// recompute whatever state they need per call; the iteration driver hands
// each pass the current canvas.
struct EditDecider {
  virtual ~EditDecider() = default;
  virtual DeletionMask decide_deletion(const Canvas& c) = 0;
  virtual PlaceholderPlan decide_placeholders(const Canvas& c) = 0;
  virtual TokenFill decide_fill(const Canvas& c) = 0;
};

// Decisions from the trained policy heads for one source sentence. Each
// decision runs a fresh decoder forward on the current canvas. Fill picks
// among non-special tokens only.
class ModelDecider : public EditDecider, public RollinPolicy {
 public:
  ModelDecider(const ModelParams& params, const IdSeq& source, bool sample = false,
               Rng* rng = nullptr);

  DeletionMask decide_deletion(const Canvas& c) override;
  PlaceholderPlan decide_placeholders(const Canvas& c) override;
  TokenFill decide_fill(const Canvas& c) override;

  DeletionMask predict_deletion(const Canvas& c) override { return decide_deletion(c); }
  TokenFill predict_fill(const Canvas& c) override { return decide_fill(c); }

 private:
  const ModelParams& params_;
  MatT<float> enc_;
  bool sample_;
  Rng* rng_;
};

// score > beta: start from the wrapped neighbor; otherwise from <s></s>.
std::pair<Canvas, InitKind> select_init(double score, const IdSeq& neighbor_target, double beta);

// One full iteration: deletion pass, placeholder pass, fill pass, each on the
// canvas the previous pass produced. Plans that would overflow max_positions
// are truncated greedily from the right; truncated placeholder counts go to
// *truncated when given, otherwise to a stderr warning.
Canvas decode_iteration(EditDecider& decider, const Canvas& c, const InferConfig& cfg,
                        IterationRecord* record, int64_t* truncated = nullptr);

// Repeats decode_iteration until a full iteration leaves the canvas unchanged
// or max_iterations is reached. Latency is measured here and includes the
// caller-supplied retrieval time.
GenerationTrace generate(EditDecider& decider, const Canvas& init, InitKind kind,
                         const InferConfig& cfg, double retrieval_ms = 0.0);

}  // namespace ne
