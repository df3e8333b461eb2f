#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "ne/common.hpp"

namespace ne {

// Boundary-wrapped token sequence being edited: tokens[0] is BOS, tokens
// [last] is EOS, and neither appears elsewhere. PAD never appears.
struct Canvas {
  IdSeq tokens;

  Canvas() : tokens{kBos, kEos} {}
  explicit Canvas(IdSeq toks) : tokens(std::move(toks)) { validate(); }

  static Canvas wrap(const IdSeq& interior_tokens);

  size_t size() const { return tokens.size(); }
  // Positions 1..n-1 of an (n+1)-token canvas.
  size_t interior_size() const { return tokens.size() - 2; }
  // Gaps between consecutive tokens: one fewer than the token count.
  size_t gap_count() const { return tokens.size() - 1; }

  IdSeq interior() const { return IdSeq(tokens.begin() + 1, tokens.end() - 1); }

  std::vector<size_t> placeholder_positions() const;

  bool operator==(const Canvas& other) const { return tokens == other.tokens; }

  void validate() const;
};

// keep[i] decides interior position i+1 (true = keep).
struct DeletionMask {
  std::vector<uint8_t> keep;
};

// counts[i] placeholders go into gap i, each within [0, k_max].
struct PlaceholderPlan {
  std::vector<int32_t> counts;
  int64_t total() const;
};

// One non-special token per placeholder, left to right.
struct TokenFill {
  IdSeq tokens;
};

Canvas apply_deletion(const Canvas& c, const DeletionMask& m);
Canvas apply_placeholder_insertion(const Canvas& c, const PlaceholderPlan& p, int32_t k_max);
Canvas apply_token_fill(const Canvas& c, const TokenFill& f);

// Minimal number of single-token insertions/deletions/substitutions.
int64_t levenshtein_distance(const IdSeq& a, const IdSeq& b);

// Matched index pairs (i in a, j in b) of one longest common subsequence.
// Tie-break: the standard DP backtrace preferring match over advancing in a
// over advancing in b, which picks the earliest positions of the first
// argument.
std::vector<std::pair<size_t, size_t>> lcs_pairs(const IdSeq& a, const IdSeq& b);

// The common token subsequence itself.
IdSeq common_subsequence(const IdSeq& a, const IdSeq& b);

// |multiset-intersection(z, y)| / |z|.
double token_overlap_sim(const IdSeq& z, const IdSeq& y);

}  // namespace ne
