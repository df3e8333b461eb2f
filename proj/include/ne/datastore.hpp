#pragma once

#include <optional>
#include <unordered_map>

#include "ne/corpus.hpp"
#include "ne/svd.hpp"
#include "ne/tfidf.hpp"

namespace ne {

enum class VectorSource { Tfidf, ExternalSentVec };

struct DatastoreEntry {
  int32_t id = 0;
  IdSeq source;
  IdSeq target;
  SparseVec tfidf;            // L2-normalized
  std::vector<float> dense;
};

struct Datastore {
  VectorSource vector_source = VectorSource::Tfidf;
  int32_t dense_dim = 0;
  TfidfModel tfidf;
  DenseProjector projector;  // empty (dim 0) in external mode
  std::vector<DatastoreEntry> entries;
  std::unordered_map<int32_t, size_t> by_id;

  const DatastoreEntry* find(int32_t id) const {
    auto it = by_id.find(id);
    return it == by_id.end() ? nullptr : &entries[it->second];
  }
  void rebuild_index();
};

// External vector file: header "dim N", then "<id> <f1> ... <fN>" per line.
using ExternalVectors = std::unordered_map<int32_t, std::vector<float>>;
ExternalVectors load_external_vectors(const std::string& path);

// One entry per pair; dense vectors from the projector, or from
// external_vectors when given (must cover every pair id at the right width).
Datastore build_datastore(const std::vector<ParallelPair>& pairs, const TfidfModel& m,
                          const DenseProjector& proj, const ExternalVectors* external_vectors);

void save_datastore(const std::string& dir, const Datastore& ds);
Datastore load_datastore(const std::string& dir);

}  // namespace ne
