#include "ne/tfidf.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace ne {

TfidfModel fit_tfidf(const std::vector<IdSeq>& sources, int32_t vocab_size) {
  if (sources.empty()) fail("fit_tfidf: empty corpus");
  TfidfModel m;
  m.df.assign(static_cast<size_t>(vocab_size), 0);
  m.n_docs = static_cast<int64_t>(sources.size());
  std::vector<int64_t> seen_at(static_cast<size_t>(vocab_size), -1);
  for (size_t d = 0; d < sources.size(); ++d) {
    for (TokenId t : sources[d]) {
      if (t < 0 || t >= vocab_size) fail("fit_tfidf: token id out of range");
      if (seen_at[static_cast<size_t>(t)] != static_cast<int64_t>(d)) {
        seen_at[static_cast<size_t>(t)] = static_cast<int64_t>(d);
        m.df[static_cast<size_t>(t)] += 1;
      }
    }
  }
  m.idf.resize(m.df.size());
  for (size_t t = 0; t < m.df.size(); ++t)
    m.idf[t] = std::log((1.0 + static_cast<double>(m.n_docs)) /
                        (1.0 + static_cast<double>(m.df[t]))) +
               1.0;
  return m;
}

SparseVec tfidf_vector(const TfidfModel& m, const IdSeq& seq, bool normalize) {
  std::map<TokenId, int64_t> tf;
  for (TokenId t : seq) {
    if (t < 0 || t >= m.vocab_size()) fail("tfidf_vector: token id out of range");
    tf[t] += 1;
  }
  SparseVec v;
  v.reserve(tf.size());
  double norm_sq = 0;
  for (const auto& [t, count] : tf) {
    const double w = static_cast<double>(count) * m.idf[static_cast<size_t>(t)];
    v.emplace_back(t, w);
    norm_sq += w * w;
  }
  if (normalize && norm_sq > 0) {
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (auto& [t, w] : v) w *= inv;
  }
  return v;
}

double sparse_dot(const SparseVec& a, const SparseVec& b) {
  double dot = 0;
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].first < b[j].first) {
      ++i;
    } else if (a[i].first > b[j].first) {
      ++j;
    } else {
      dot += a[i].second * b[j].second;
      ++i;
      ++j;
    }
  }
  return dot;
}

double tfidf_cosine(const TfidfModel& m, const IdSeq& a, const IdSeq& b) {
  const SparseVec va = tfidf_vector(m, a, true);
  const SparseVec vb = tfidf_vector(m, b, true);
  if (va.empty() || vb.empty()) return 0.0;
  return sparse_dot(va, vb);
}

}  // namespace ne
