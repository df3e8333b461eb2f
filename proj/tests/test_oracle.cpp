#include <doctest.h>

#include <functional>

#include "ne/oracle.hpp"
#include "ne/vocab.hpp"

using namespace ne;

namespace {

constexpr TokenId A = kNumSpecials + 0;
constexpr TokenId B = kNumSpecials + 1;
constexpr TokenId X = kNumSpecials + 2;
constexpr TokenId Y = kNumSpecials + 3;

IdSeq seq(std::initializer_list<TokenId> ids) { return IdSeq(ids); }

IdSeq random_seq(Rng& rng, size_t min_len, size_t max_len, int alphabet) {
  IdSeq s(min_len + rng.uniform_below(max_len - min_len + 1));
  for (auto& t : s) t = static_cast<TokenId>(kNumSpecials + rng.uniform_below(alphabet));
  return s;
}

IdSeq random_subsequence(const IdSeq& full, Rng& rng) {
  IdSeq out;
  for (TokenId t : full)
    if (rng.uniform() < 0.5) out.push_back(t);
  return out;
}

// minimum over all 2^n masks of D(target, kept interior)
int64_t brute_force_min_mask_distance(const Canvas& c, const IdSeq& target) {
  const IdSeq interior = c.interior();
  const size_t n = interior.size();
  int64_t best = INT64_MAX;
  for (uint64_t bits = 0; bits < (1ull << n); ++bits) {
    IdSeq kept;
    for (size_t i = 0; i < n; ++i)
      if (bits & (1ull << i)) kept.push_back(interior[i]);
    best = std::min(best, levenshtein_distance(target, kept));
  }
  return best;
}

void for_all_seqs(size_t max_len, int alphabet, const std::function<void(const IdSeq&)>& fn) {
  IdSeq cur;
  std::function<void()> rec = [&]() {
    fn(cur);
    if (cur.size() == max_len) return;
    for (int t = 0; t < alphabet; ++t) {
      cur.push_back(static_cast<TokenId>(kNumSpecials + t));
      rec();
      cur.pop_back();
    }
  };
  rec();
}

}  // namespace

TEST_CASE("oracle_deletion keeps only shared tokens") {
  const Canvas y_del = Canvas::wrap(seq({X, A, Y}));
  const DeletionMask m = oracle_deletion(y_del, seq({A}));
  CHECK(m.keep == std::vector<uint8_t>{0, 1, 0});
  const Canvas same = Canvas::wrap(seq({A, B}));
  CHECK(oracle_deletion(same, seq({A, B})).keep == std::vector<uint8_t>{1, 1});
}

TEST_CASE("oracle_deletion attains the exhaustive minimum (scaled-down)") {
  // interior length <= 4 over 3 symbols here; the acceptance suite runs <= 7
  for_all_seqs(4, 3, [&](const IdSeq& interior) {
    for_all_seqs(3, 3, [&](const IdSeq& target) {
      const Canvas c = Canvas::wrap(interior);
      const DeletionMask m = oracle_deletion(c, target);
      const IdSeq kept = apply_deletion(c, m).interior();
      CHECK(levenshtein_distance(target, kept) == brute_force_min_mask_distance(c, target));
    });
  });
}

TEST_CASE("oracle_insertion forced alignments") {
  const Canvas y_ins = Canvas::wrap(seq({B}));
  const auto [plan, fill] = oracle_insertion(y_ins, seq({A, B, X}));
  CHECK(plan.counts == std::vector<int32_t>{1, 1});
  CHECK(fill.tokens == seq({A, X}));

  const auto [plan2, fill2] = oracle_insertion(Canvas(), seq({A, B}));
  CHECK(plan2.counts == std::vector<int32_t>{2});
  CHECK(fill2.tokens == seq({A, B}));

  CHECK_THROWS_WITH(oracle_insertion(Canvas::wrap(seq({Y})), seq({A})),
                    "oracle_insertion: not a subsequence");
}

TEST_CASE("oracle_insertion reconstructs exactly on 1000 random pairs") {
  Rng rng(23);
  for (int trial = 0; trial < 1000; ++trial) {
    const IdSeq target = random_seq(rng, 1, 12, 5);
    const Canvas y_ins = Canvas::wrap(random_subsequence(target, rng));
    const auto [plan, fill] = oracle_insertion(y_ins, target);
    const Canvas filled =
        apply_token_fill(apply_placeholder_insertion(y_ins, plan, INT32_MAX), fill);
    CHECK(filled.interior() == target);
  }
}

TEST_CASE("random_deletion endpoints and mean kept fraction") {
  const IdSeq target = seq({A, B, X, Y});
  Rng rng(31);
  CHECK(delete_tokens_at_rate(target, 0.0, rng).interior() == target);
  CHECK(delete_tokens_at_rate(target, 1.0, rng).tokens == IdSeq{kBos, kEos});
  int64_t kept = 0, total = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const Canvas c = random_deletion(target, rng);
    kept += static_cast<int64_t>(c.interior_size());
    total += static_cast<int64_t>(target.size());
  }
  const double frac = static_cast<double>(kept) / static_cast<double>(total);
  CHECK(frac == doctest::Approx(0.5).epsilon(0.04));  // law of total expectation over uniform rho
}

TEST_CASE("choose_policy branches") {
  OracleConfig cfg;
  cfg.alpha = 0.6;
  cfg.beta = 0.3;
  const PolicyChoice nn = choose_policy(0.3, 0.9, cfg);
  CHECK(nn.deletion == PolicySide::Neighbor);
  CHECK(nn.insertion == PolicySide::Neighbor);
  const PolicyChoice nt = choose_policy(0.3, 0.1, cfg);
  CHECK(nt.deletion == PolicySide::Neighbor);
  CHECK(nt.insertion == PolicySide::Target);
  const PolicyChoice tt = choose_policy(0.8, 0.9, cfg);
  CHECK(tt.deletion == PolicySide::Target);
  CHECK(tt.insertion == PolicySide::Target);
  // boundary: sim == beta goes target-side for insertion
  const PolicyChoice edge = choose_policy(0.3, 0.3, cfg);
  CHECK(edge.insertion == PolicySide::Target);
}

TEST_CASE("choose_policy concentration at alpha=0.6") {
  OracleConfig cfg;
  Rng rng(41);
  int64_t neighbor_del = 0;
  const int64_t n = 10000;
  for (int64_t i = 0; i < n; ++i) {
    const PolicyChoice p = choose_policy(rng.uniform(), rng.uniform(), cfg);
    if (p.deletion == PolicySide::Neighbor) ++neighbor_del;
    CHECK_FALSE((p.deletion == PolicySide::Target && p.insertion == PolicySide::Neighbor));
  }
  CHECK(static_cast<double>(neighbor_del) / static_cast<double>(n) ==
        doctest::Approx(0.6).epsilon(0.034));
}

TEST_CASE("make_training_instance: perfect neighbor needs no edits") {
  ParallelPair pair;
  pair.id = 0;
  pair.source = seq({A});
  pair.target = seq({A, B, X});
  const IdSeq neighbor = pair.target;
  Rng rng(1);
  const TrainingInstance inst = make_training_instance(
      pair, &neighbor, nullptr, {PolicySide::Neighbor, PolicySide::Neighbor}, rng);
  CHECK(inst.del_labels.keep == std::vector<uint8_t>{1, 1, 1});
  CHECK(inst.plh_labels.counts == std::vector<int32_t>{0, 0, 0, 0});
  CHECK(inst.tok_labels.tokens.empty());
  CHECK(apply_token_fill(inst.fill_canvas, inst.tok_labels).interior() == pair.target);
}

TEST_CASE("make_training_instance: target policy reconstruction invariant") {
  Rng rng(53);
  for (int trial = 0; trial < 300; ++trial) {
    ParallelPair pair;
    pair.id = trial;
    pair.source = random_seq(rng, 1, 6, 4);
    pair.target = random_seq(rng, 1, 10, 4);
    const IdSeq neighbor = random_seq(rng, 1, 10, 4);
    for (auto policy :
         {PolicyChoice{PolicySide::Target, PolicySide::Target},
          PolicyChoice{PolicySide::Neighbor, PolicySide::Target},
          PolicyChoice{PolicySide::Neighbor, PolicySide::Neighbor}}) {
      Rng inst_rng = rng.fork(static_cast<uint64_t>(trial));
      const TrainingInstance inst =
          make_training_instance(pair, &neighbor, nullptr, policy, inst_rng);
      // exact reconstruction
      CHECK(apply_token_fill(inst.fill_canvas, inst.tok_labels).interior() == pair.target);
      // deletion labels keep a subsequence of the target
      const IdSeq kept = apply_deletion(inst.del_canvas, inst.del_labels).interior();
      CHECK(static_cast<int64_t>(common_subsequence(kept, pair.target).size()) ==
            static_cast<int64_t>(kept.size()));
    }
  }
}

TEST_CASE("make_training_instance: determinism given seed") {
  ParallelPair pair;
  pair.id = 9;
  pair.source = seq({A, B});
  pair.target = seq({A, X, B, Y});
  Rng r1(77), r2(77);
  const TrainingInstance i1 = make_training_instance(
      pair, nullptr, nullptr, {PolicySide::Target, PolicySide::Target}, r1);
  const TrainingInstance i2 = make_training_instance(
      pair, nullptr, nullptr, {PolicySide::Target, PolicySide::Target}, r2);
  CHECK(i1.ins_canvas == i2.ins_canvas);
  CHECK(i1.del_canvas == i2.del_canvas);
  CHECK(i1.tok_labels.tokens == i2.tok_labels.tokens);
}

TEST_CASE("make_training_instance: neighbor policy without neighbor errors") {
  ParallelPair pair;
  pair.id = 0;
  pair.source = seq({A});
  pair.target = seq({A});
  Rng rng(1);
  CHECK_THROWS(make_training_instance(pair, nullptr, nullptr,
                                      {PolicySide::Neighbor, PolicySide::Neighbor}, rng));
}

TEST_CASE("targets containing UNK train like any other token") {
  // a capped vocabulary maps rare corpus tokens to UNK; instances must still
  // reconstruct and fill canvases must accept the UNK label
  ParallelPair pair;
  pair.id = 1;
  pair.source = seq({A, kUnk});
  pair.target = seq({A, kUnk, B});
  const IdSeq neighbor = seq({A, Y, B});
  Rng rng(5);
  for (auto policy : {PolicyChoice{PolicySide::Neighbor, PolicySide::Neighbor},
                      PolicyChoice{PolicySide::Target, PolicySide::Target}}) {
    Rng r = rng.fork(static_cast<uint64_t>(policy.deletion == PolicySide::Neighbor));
    const TrainingInstance inst = make_training_instance(pair, &neighbor, nullptr, policy, r);
    CHECK(apply_token_fill(inst.fill_canvas, inst.tok_labels).interior() == pair.target);
  }
  // structural specials stay rejected
  const Canvas one(seq({kBos, kPlh, kEos}));
  CHECK_THROWS(apply_token_fill(one, TokenFill{{kBos}}));
  CHECK_THROWS(apply_token_fill(one, TokenFill{{kPad}}));
}

TEST_CASE("worked-example instance: deletion keeps the published canvas") {
  const std::string neighbor_de =
      "( 56 ) Die Ausfuhrpreise der beiden kooperierenden thailändischen Hersteller stiegen "
      "von 1996 bis zum Untersuchungszeitraum um 6 % .";
  const std::string target_de =
      "( 48 ) Die Kapazitätsauslastung stieg von 1996 bis zum UZ um 56 % .";
  const Vocabulary vocab = Vocabulary::build({neighbor_de, target_de}, 100);

  ParallelPair pair;
  pair.id = 0;
  pair.source = vocab.encode("( 48 ) Capacity utilisation increased");
  pair.target = vocab.encode(target_de);
  const IdSeq neighbor = vocab.encode(neighbor_de);
  Rng rng(1);
  const TrainingInstance inst = make_training_instance(
      pair, &neighbor, nullptr, {PolicySide::Neighbor, PolicySide::Neighbor}, rng);

  const Canvas kept = apply_deletion(inst.del_canvas, inst.del_labels);
  CHECK(vocab.decode(kept.interior()) == "( ) Die von 1996 bis zum um % .");
  CHECK(apply_token_fill(inst.fill_canvas, inst.tok_labels).interior() == pair.target);
}
