#pragma once

#include "ne/datastore.hpp"

namespace ne {

struct RetrievalConfig {
  int32_t k_candidates = 50;
  bool exclude_self = false;
  int32_t dim = 64;  // projector dimension at build time
};

struct RetrievalResult {
  int32_t neighbor_id = -1;
  double rerank_score = 0;  // exact tfidf cosine
  double dense_score = 0;
};

// Top-k candidates by dense cosine, reranked by exact tfidf cosine between
// the query source and candidate sources. With exclude_self, the query's own
// pair id and entries whose source equals the query verbatim are skipped.
// query_dense is required for external-vector datastores and ignored
// otherwise.
RetrievalResult retrieve(const Datastore& ds, const IdSeq& query_source,
                         const std::vector<float>* query_dense, const RetrievalConfig& cfg,
                         std::optional<int32_t> query_id = std::nullopt);

double dense_cosine(const std::vector<float>& a, const std::vector<float>& b);

// Neighbor file rows: query_id, neighbor_pair_id, rerank_score, dense_score.
struct NeighborRow {
  int32_t query_id = 0;
  int32_t neighbor_id = -1;
  double rerank_score = 0;
  double dense_score = 0;
};

void save_neighbors(const std::string& path, const std::vector<NeighborRow>& rows);
std::vector<NeighborRow> load_neighbors(const std::string& path);

}  // namespace ne
