#include "ne/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ne/io.hpp"

namespace ne {

double dense_cosine(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size()) fail("dense_cosine: dimension mismatch");
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

RetrievalResult retrieve(const Datastore& ds, const IdSeq& query_source,
                         const std::vector<float>* query_dense, const RetrievalConfig& cfg,
                         std::optional<int32_t> query_id) {
  if (ds.entries.empty()) fail("retrieve: empty datastore");
  if (cfg.k_candidates < 1) fail("retrieve: k_candidates must be >= 1");

  const SparseVec query_sparse = tfidf_vector(ds.tfidf, query_source, true);
  std::vector<float> projected;
  if (ds.vector_source == VectorSource::ExternalSentVec) {
    if (query_dense == nullptr) fail("retrieve: external-vector datastore needs a query vector");
  } else {
    projected = ds.projector.project(query_sparse);
    query_dense = &projected;
  }

  auto excluded = [&](const DatastoreEntry& e) {
    if (!cfg.exclude_self) return false;
    if (query_id.has_value() && e.id == *query_id) return true;
    return e.source == query_source;
  };

  struct Scored {
    double score;
    size_t index;
  };
  std::vector<Scored> scored;
  scored.reserve(ds.entries.size());
  for (size_t i = 0; i < ds.entries.size(); ++i) {
    if (excluded(ds.entries[i])) continue;
    scored.push_back({dense_cosine(*query_dense, ds.entries[i].dense), i});
  }
  if (scored.empty()) fail("retrieve: no neighbor (all candidates excluded)");

  const size_t k = std::min<size_t>(static_cast<size_t>(cfg.k_candidates), scored.size());
  auto better = [&](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return ds.entries[a.index].id < ds.entries[b.index].id;
  };
  std::partial_sort(scored.begin(), scored.begin() + static_cast<int64_t>(k), scored.end(), better);

  RetrievalResult best;
  bool have = false;
  for (size_t c = 0; c < k; ++c) {
    const auto& entry = ds.entries[scored[c].index];
    const double rerank = sparse_dot(query_sparse, entry.tfidf);
    if (!have || rerank > best.rerank_score ||
        (rerank == best.rerank_score && entry.id < best.neighbor_id)) {
      best.neighbor_id = entry.id;
      best.rerank_score = rerank;
      best.dense_score = scored[c].score;
      have = true;
    }
  }
  return best;
}

void save_neighbors(const std::string& path, const std::vector<NeighborRow>& rows) {
  std::ostringstream os;
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d\t%d\t%.9f\t%.9f\n", r.query_id, r.neighbor_id,
                  r.rerank_score, r.dense_score);
    os << buf;
  }
  write_text_file(path, os.str());
}

std::vector<NeighborRow> load_neighbors(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail("cannot open neighbor file: " + path);
  std::vector<NeighborRow> rows;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    NeighborRow r;
    std::istringstream ls(line);
    if (!(ls >> r.query_id >> r.neighbor_id >> r.rerank_score >> r.dense_score))
      fail("neighbor file " + path + " line " + std::to_string(line_no) + ": malformed row");
    rows.push_back(r);
  }
  return rows;
}

}  // namespace ne
