#include "ne/edit_env.hpp"

#include <algorithm>
#include <unordered_map>

namespace ne {

Canvas Canvas::wrap(const IdSeq& interior_tokens) {
  IdSeq toks;
  toks.reserve(interior_tokens.size() + 2);
  toks.push_back(kBos);
  toks.insert(toks.end(), interior_tokens.begin(), interior_tokens.end());
  toks.push_back(kEos);
  return Canvas(std::move(toks));
}

void Canvas::validate() const {
  if (tokens.size() < 2) fail("canvas must hold at least BOS and EOS");
  if (tokens.front() != kBos || tokens.back() != kEos) fail("canvas boundaries must be BOS/EOS");
  for (size_t i = 1; i + 1 < tokens.size(); ++i) {
    const TokenId t = tokens[i];
    if (t == kBos || t == kEos) fail("BOS/EOS inside canvas interior");
    if (t == kPad) fail("PAD inside canvas");
    if (t < 0) fail("negative token id in canvas");
  }
}

std::vector<size_t> Canvas::placeholder_positions() const {
  std::vector<size_t> pos;
  for (size_t i = 1; i + 1 < tokens.size(); ++i)
    if (tokens[i] == kPlh) pos.push_back(i);
  return pos;
}

int64_t PlaceholderPlan::total() const {
  int64_t t = 0;
  for (int32_t c : counts) t += c;
  return t;
}

Canvas apply_deletion(const Canvas& c, const DeletionMask& m) {
  if (m.keep.size() != c.interior_size()) fail("deletion mask length mismatch");
  IdSeq out;
  out.reserve(c.tokens.size());
  out.push_back(kBos);
  for (size_t i = 0; i < m.keep.size(); ++i)
    if (m.keep[i]) out.push_back(c.tokens[i + 1]);
  out.push_back(kEos);
  return Canvas(std::move(out));
}

Canvas apply_placeholder_insertion(const Canvas& c, const PlaceholderPlan& p, int32_t k_max) {
  if (p.counts.size() != c.gap_count()) fail("placeholder plan length mismatch");
  for (int32_t cnt : p.counts) {
    if (cnt < 0) fail("negative placeholder count");
    if (cnt > k_max) fail("placeholder count exceeds K_max");
  }
  IdSeq out;
  out.reserve(c.tokens.size() + static_cast<size_t>(p.total()));
  for (size_t i = 0; i < c.tokens.size(); ++i) {
    out.push_back(c.tokens[i]);
    if (i < p.counts.size())
      for (int32_t k = 0; k < p.counts[i]; ++k) out.push_back(kPlh);
  }
  return Canvas(std::move(out));
}

Canvas apply_token_fill(const Canvas& c, const TokenFill& f) {
  IdSeq out = c.tokens;
  size_t next = 0;
  for (auto& t : out) {
    if (t != kPlh) continue;
    if (next >= f.tokens.size()) fail("token fill shorter than placeholder count");
    // UNK is a legal fill (capped vocabularies put it in training targets);
    // the structural specials would corrupt the canvas
    const TokenId fill = f.tokens[next];
    if (fill == kBos || fill == kEos || fill == kPlh || fill == kPad)
      fail("structural special token in fill");
    t = fill;
    ++next;
  }
  if (next != f.tokens.size()) fail("token fill longer than placeholder count");
  return Canvas(std::move(out));
}

int64_t levenshtein_distance(const IdSeq& a, const IdSeq& b) {
  const size_t n = a.size(), m = b.size();
  std::vector<int64_t> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<int64_t>(j);
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int64_t>(i);
    for (size_t j = 1; j <= m; ++j) {
      const int64_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

std::vector<std::pair<size_t, size_t>> lcs_pairs(const IdSeq& a, const IdSeq& b) {
  const size_t n = a.size(), m = b.size();
  std::vector<std::vector<int32_t>> dp(n + 1, std::vector<int32_t>(m + 1, 0));
  for (size_t i = 1; i <= n; ++i)
    for (size_t j = 1; j <= m; ++j)
      dp[i][j] = a[i - 1] == b[j - 1] ? dp[i - 1][j - 1] + 1
                                      : std::max(dp[i - 1][j], dp[i][j - 1]);
  std::vector<std::pair<size_t, size_t>> pairs;
  size_t i = n, j = m;
  while (i > 0 && j > 0) {
    if (a[i - 1] == b[j - 1]) {
      pairs.emplace_back(i - 1, j - 1);
      --i;
      --j;
    } else if (dp[i - 1][j] == dp[i][j]) {
      --i;
    } else {
      --j;
    }
  }
  std::reverse(pairs.begin(), pairs.end());
  return pairs;
}

IdSeq common_subsequence(const IdSeq& a, const IdSeq& b) {
  IdSeq out;
  for (auto [i, j] : lcs_pairs(a, b)) {
    (void)j;
    out.push_back(a[i]);
  }
  return out;
}

double token_overlap_sim(const IdSeq& z, const IdSeq& y) {
  if (z.empty()) fail("token_overlap_sim: empty neighbor sequence");
  std::unordered_map<TokenId, int64_t> counts;
  for (TokenId t : y) counts[t] += 1;
  int64_t overlap = 0;
  for (TokenId t : z) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      ++overlap;
      --it->second;
    }
  }
  return static_cast<double>(overlap) / static_cast<double>(z.size());
}

}  // namespace ne
