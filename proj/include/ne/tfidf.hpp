#pragma once

#include <utility>
#include <vector>

#include "ne/common.hpp"

namespace ne {

// Sparse vector sorted by token id. Weights are double in memory; the
// persisted blocks round them to float32.
using SparseVec = std::vector<std::pair<TokenId, double>>;

// Document frequencies over a corpus plus the derived smoothed idf:
// idf[t] = ln((1 + n_docs) / (1 + df[t])) + 1.
struct TfidfModel {
  std::vector<int64_t> df;
  int64_t n_docs = 0;
  std::vector<double> idf;

  int32_t vocab_size() const { return static_cast<int32_t>(df.size()); }
};

TfidfModel fit_tfidf(const std::vector<IdSeq>& sources, int32_t vocab_size);

// Raw-count tf times idf; L2-normalized when normalize is set.
SparseVec tfidf_vector(const TfidfModel& m, const IdSeq& seq, bool normalize = true);

double sparse_dot(const SparseVec& a, const SparseVec& b);

// Cosine of the tfidf vectors; 0 when either vector is all-zero.
double tfidf_cosine(const TfidfModel& m, const IdSeq& a, const IdSeq& b);

}  // namespace ne
