#include <doctest.h>

#include <map>

#include "ne/inference.hpp"
#include "ne/vocab.hpp"

using namespace ne;

namespace {

ModelConfig small_config(int32_t vocab) {
  ModelConfig cfg;
  cfg.d_model = 16;
  cfg.d_hidden = 32;
  cfg.n_head = 2;
  cfg.n_layer = 1;
  cfg.k_max = 8;
  cfg.vocab_size = vocab;
  cfg.max_positions = 32;
  cfg.dropout = 0.0;
  return cfg;
}

// decisions scripted per canvas; anything unscripted keeps everything and
// inserts nothing
struct ScriptedDecider : EditDecider {
  std::map<IdSeq, DeletionMask> deletions;
  std::map<IdSeq, PlaceholderPlan> plans;
  std::map<IdSeq, TokenFill> fills;

  DeletionMask decide_deletion(const Canvas& c) override {
    auto it = deletions.find(c.tokens);
    if (it != deletions.end()) return it->second;
    return DeletionMask{std::vector<uint8_t>(c.interior_size(), 1)};
  }
  PlaceholderPlan decide_placeholders(const Canvas& c) override {
    auto it = plans.find(c.tokens);
    if (it != plans.end()) return it->second;
    return PlaceholderPlan{std::vector<int32_t>(c.gap_count(), 0)};
  }
  TokenFill decide_fill(const Canvas& c) override {
    auto it = fills.find(c.tokens);
    if (it != fills.end()) return it->second;
    return TokenFill{};
  }
};

InferConfig test_infer(int32_t max_iterations = 10) {
  InferConfig cfg;
  cfg.max_iterations = max_iterations;
  cfg.k_max = 255;
  cfg.max_positions = 64;
  return cfg;
}

}  // namespace

TEST_CASE("select_init") {
  const IdSeq neighbor = {5, 6};
  auto [c1, k1] = select_init(0.9, neighbor, 0.3);
  CHECK(k1 == InitKind::Neighbor);
  CHECK(c1.interior() == neighbor);
  auto [c2, k2] = select_init(0.1, neighbor, 0.3);
  CHECK(k2 == InitKind::Empty);
  CHECK(c2.tokens == IdSeq{kBos, kEos});
  // beta = 1.0 means special tokens always
  auto [c3, k3] = select_init(1.0, neighbor, 1.0);
  CHECK(k3 == InitKind::Empty);
  (void)c3;
}

TEST_CASE("immediate fixed point yields one iteration") {
  ScriptedDecider decider;
  const Canvas init = Canvas::wrap({5, 6});
  const GenerationTrace t = generate(decider, init, InitKind::Neighbor, test_infer());
  CHECK(t.iterations == 1);
  CHECK(t.output == IdSeq{5, 6});
  CHECK(t.steps.size() == 1);
  CHECK(t.latency_ms >= t.retrieval_ms);
}

TEST_CASE("max_iterations caps a never-converging decider") {
  // flips a token back and forth forever
  struct Flipper : ScriptedDecider {
    PlaceholderPlan decide_placeholders(const Canvas& c) override {
      // insert one placeholder at the first gap every time
      PlaceholderPlan p{std::vector<int32_t>(c.gap_count(), 0)};
      p.counts[0] = 1;
      return p;
    }
    TokenFill decide_fill(const Canvas& c) override {
      return TokenFill{IdSeq(c.placeholder_positions().size(), 7)};
    }
  } flipper;
  const GenerationTrace t = generate(flipper, Canvas(), InitKind::Empty, test_infer(3));
  CHECK(t.iterations == 3);
  CHECK(t.steps.size() == 3);
}

TEST_CASE("rigged composition from empty canvas") {
  ScriptedDecider decider;
  decider.plans[{kBos, kEos}] = PlaceholderPlan{{2}};
  decider.fills[{kBos, kPlh, kPlh, kEos}] = TokenFill{{5, 6}};
  const GenerationTrace t = generate(decider, Canvas(), InitKind::Empty, test_infer());
  CHECK(t.output == IdSeq{5, 6});
  CHECK(t.iterations == 2);  // one edit iteration + the fixed-point check
  CHECK(t.steps[0].after_plh.tokens == IdSeq{kBos, kPlh, kPlh, kEos});
}

TEST_CASE("overlength insertion plans truncate from the right") {
  ScriptedDecider decider;
  InferConfig cfg = test_infer(1);
  cfg.max_positions = 6;
  decider.plans[{kBos, 5, kEos}] = PlaceholderPlan{{2, 9}};  // wants 11 tokens
  struct CountingFill : ScriptedDecider {
    TokenFill decide_fill(const Canvas& c) override {
      return TokenFill{IdSeq(c.placeholder_positions().size(), 9)};
    }
  } filler;
  filler.plans = decider.plans;
  const GenerationTrace t =
      generate(filler, Canvas::wrap({5}), InitKind::Neighbor, cfg);
  // 3 canvas tokens + at most 3 placeholders fit max_positions 6;
  // the right gap loses its surplus first
  CHECK(t.steps[0].after_plh.size() == 6);
  CHECK(t.steps[0].after_plh.tokens == IdSeq{kBos, kPlh, kPlh, 5, kPlh, kEos});
}

TEST_CASE("k_max clips predicted counts") {
  ScriptedDecider decider;
  InferConfig cfg = test_infer(1);
  cfg.k_max = 1;
  decider.plans[{kBos, kEos}] = PlaceholderPlan{{5}};
  struct Fill9 : ScriptedDecider {
    TokenFill decide_fill(const Canvas& c) override {
      return TokenFill{IdSeq(c.placeholder_positions().size(), 9)};
    }
  } filler;
  filler.plans = decider.plans;
  const GenerationTrace t = generate(filler, Canvas(), InitKind::Empty, cfg);
  CHECK(t.steps[0].after_plh.tokens == IdSeq{kBos, kPlh, kEos});
}

TEST_CASE("model decider with zeroed heads is an immediate fixed point") {
  const ModelConfig cfg = small_config(16);
  ModelParams p = init_params<float>(cfg, 3);
  p.head_del.setZero();  // ties keep tokens
  p.head_plh.setZero();  // argmax of uniform counts = 0
  ModelDecider decider(p, {5, 6});
  const Canvas init = Canvas::wrap({7, 8, 9});
  InferConfig icfg = test_infer();
  icfg.k_max = cfg.k_max;
  icfg.max_positions = cfg.max_positions;
  const GenerationTrace t = generate(decider, init, InitKind::Neighbor, icfg);
  CHECK(t.iterations == 1);
  CHECK(t.output == IdSeq{7, 8, 9});
}

TEST_CASE("model decider fill never emits special tokens and is deterministic") {
  const ModelConfig cfg = small_config(16);
  const ModelParams p = init_params<float>(cfg, 4);
  ModelDecider decider(p, {5, 6});
  InferConfig icfg = test_infer();
  icfg.k_max = cfg.k_max;
  icfg.max_positions = cfg.max_positions;
  const GenerationTrace a = generate(decider, Canvas(), InitKind::Empty, icfg);
  ModelDecider decider2(p, {5, 6});
  const GenerationTrace b = generate(decider2, Canvas(), InitKind::Empty, icfg);
  CHECK(a.output == b.output);  // greedy decoding is deterministic
  for (TokenId t : a.output) CHECK_FALSE(is_special(t));
}

TEST_CASE("published worked example: neighbor edited to the target in one iteration") {
  // word-token level reconstruction of the De translation trace
  const std::string neighbor_de =
      "( 56 ) Die Ausfuhrpreise der beiden kooperierenden thailändischen Hersteller stiegen "
      "von 1996 bis zum Untersuchungszeitraum um 6 % .";
  const std::string target_de =
      "( 48 ) Die Kapazitätsauslastung stieg von 1996 bis zum UZ um 56 % .";
  const std::string deleted_de = "( ) Die von 1996 bis zum um % .";

  const Vocabulary vocab = Vocabulary::build({neighbor_de, target_de}, 100);
  const IdSeq neighbor = vocab.encode(neighbor_de);
  const IdSeq target = vocab.encode(target_de);

  // the displayed decisions: delete the non-shared tokens, insert 5
  // placeholders in the shown gaps, fill them with the shown tokens
  ScriptedDecider decider;
  const Canvas nc = Canvas::wrap(neighbor);
  decider.deletions[nc.tokens] = oracle_deletion(nc, target);

  const Canvas after_del = apply_deletion(nc, decider.deletions[nc.tokens]);
  CHECK(vocab.decode(after_del.interior()) == deleted_de);

  PlaceholderPlan plan{std::vector<int32_t>(after_del.gap_count(), 0)};
  plan.counts[1] = 1;  // ( _ )
  plan.counts[3] = 2;  // Die _ _ von
  plan.counts[7] = 1;  // zum _ um
  plan.counts[8] = 1;  // um _ %
  decider.plans[after_del.tokens] = plan;

  const Canvas after_plh = apply_placeholder_insertion(after_del, plan, 255);
  decider.fills[after_plh.tokens] =
      TokenFill{vocab.encode("48 Kapazitätsauslastung stieg UZ 56")};

  const auto [init, kind] = select_init(0.9, neighbor, 0.3);
  CHECK(kind == InitKind::Neighbor);
  const GenerationTrace t = generate(decider, init, kind, test_infer());

  REQUIRE(t.steps.size() >= 1);
  CHECK(vocab.decode(t.steps[0].after_del.interior()) == deleted_de);
  CHECK(t.steps[0].after_plh == after_plh);
  CHECK(vocab.decode(t.steps[0].after_fill.interior()) == target_de);
  CHECK(vocab.decode(t.output) == target_de);
  CHECK(t.steps[0].after_fill.interior() == target);
}

TEST_CASE("every intermediate canvas stays valid under adversarial deciders") {
  struct RandomDecider : EditDecider {
    Rng rng{12345};
    DeletionMask decide_deletion(const Canvas& c) override {
      DeletionMask m;
      m.keep.resize(c.interior_size());
      for (auto& k : m.keep) k = rng.uniform() < 0.7;
      return m;
    }
    PlaceholderPlan decide_placeholders(const Canvas& c) override {
      PlaceholderPlan p;
      p.counts.resize(c.gap_count());
      for (auto& cnt : p.counts) cnt = static_cast<int32_t>(rng.uniform_below(4));
      return p;
    }
    TokenFill decide_fill(const Canvas& c) override {
      TokenFill f;
      f.tokens.resize(c.placeholder_positions().size());
      for (auto& t : f.tokens) t = static_cast<TokenId>(kNumSpecials + rng.uniform_below(20));
      return f;
    }
  } decider;

  InferConfig cfg;
  cfg.max_iterations = 10;
  cfg.k_max = 3;
  cfg.max_positions = 40;
  for (int trial = 0; trial < 50; ++trial) {
    const GenerationTrace t = generate(decider, Canvas::wrap({7, 8}), InitKind::Neighbor, cfg);
    CHECK(t.iterations >= 1);
    CHECK(static_cast<size_t>(t.iterations) == t.steps.size());
    for (const auto& step : t.steps) {
      // Canvas construction validates boundaries and forbidden tokens; length
      // must respect the cap after every pass
      step.before.validate();
      step.after_del.validate();
      step.after_plh.validate();
      step.after_fill.validate();
      CHECK(step.after_plh.size() <= static_cast<size_t>(cfg.max_positions));
      CHECK(step.after_plh.size() ==
            step.after_del.size() + step.after_plh.placeholder_positions().size());
      CHECK(step.after_fill.size() == step.after_plh.size());  // fill replaces, never resizes
      CHECK(step.after_fill.placeholder_positions().empty());
    }
    CHECK(t.latency_ms >= t.retrieval_ms);
  }
}
