#include "ne/datastore.hpp"

#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "ne/io.hpp"

namespace ne {

using json = nlohmann::ordered_json;

void Datastore::rebuild_index() {
  by_id.clear();
  for (size_t i = 0; i < entries.size(); ++i) {
    auto [it, inserted] = by_id.emplace(entries[i].id, i);
    (void)it;
    if (!inserted) fail("duplicate datastore entry id " + std::to_string(entries[i].id));
  }
}

ExternalVectors load_external_vectors(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail("cannot open vector file: " + path);
  std::string word;
  int64_t dim = 0;
  if (!(is >> word) || word != "dim" || !(is >> dim) || dim < 1)
    fail("vector file " + path + ": expected header \"dim N\"");
  ExternalVectors out;
  int64_t id;
  while (is >> id) {
    std::vector<float> v(static_cast<size_t>(dim));
    for (int64_t i = 0; i < dim; ++i) {
      if (!(is >> v[static_cast<size_t>(i)]))
        fail("vector file " + path + ": truncated vector for id " + std::to_string(id));
    }
    if (!out.emplace(static_cast<int32_t>(id), std::move(v)).second)
      fail("vector file " + path + ": duplicate id " + std::to_string(id));
  }
  return out;
}

Datastore build_datastore(const std::vector<ParallelPair>& pairs, const TfidfModel& m,
                          const DenseProjector& proj, const ExternalVectors* external_vectors) {
  Datastore ds;
  ds.tfidf = m;
  if (external_vectors != nullptr) {
    ds.vector_source = VectorSource::ExternalSentVec;
    ds.dense_dim = external_vectors->empty()
                       ? 0
                       : static_cast<int32_t>(external_vectors->begin()->second.size());
  } else {
    ds.vector_source = VectorSource::Tfidf;
    ds.projector = proj;
    ds.dense_dim = proj.dim;
  }
  ds.entries.reserve(pairs.size());
  for (const auto& p : pairs) {
    DatastoreEntry e;
    e.id = p.id;
    e.source = p.source;
    e.target = p.target;
    e.tfidf = tfidf_vector(m, p.source, true);
    if (external_vectors != nullptr) {
      auto it = external_vectors->find(p.id);
      if (it == external_vectors->end())
        fail("missing external vector for pair id " + std::to_string(p.id));
      if (static_cast<int32_t>(it->second.size()) != ds.dense_dim)
        fail("external vector for pair id " + std::to_string(p.id) + " has dimension " +
             std::to_string(it->second.size()) + ", expected " + std::to_string(ds.dense_dim));
      e.dense = it->second;
    } else {
      e.dense = proj.project(e.tfidf);
    }
    ds.entries.push_back(std::move(e));
  }
  ds.rebuild_index();
  return ds;
}

namespace {

constexpr char kSparseMagic[8] = {'N', 'E', 'S', 'P', 'A', 'R', 'S', 'E'};
constexpr char kDfMagic[8] = {'N', 'E', 'D', 'F', 'R', 'E', 'Q', '\0'};
constexpr uint32_t kDsVersion = 1;

template <typename T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is, const std::string& path) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) fail("truncated file: " + path);
  return v;
}

}  // namespace

void save_datastore(const std::string& dir, const Datastore& ds) {
  ensure_dir(dir);
  {
    std::ostringstream manifest;
    json header{{"format_version", 1},
                {"n_entries", ds.entries.size()},
                {"vector_source", ds.vector_source == VectorSource::Tfidf ? "tfidf" : "external"},
                {"dense_dim", ds.dense_dim},
                {"vocab_size", ds.tfidf.vocab_size()},
                {"n_docs", ds.tfidf.n_docs}};
    manifest << header.dump() << '\n';
    for (const auto& e : ds.entries) {
      json line{{"id", e.id}, {"source", e.source}, {"target", e.target}};
      manifest << line.dump() << '\n';
    }
    write_text_file(dir + "/manifest.jsonl", manifest.str());
  }
  {
    std::ofstream os(dir + "/df.bin", std::ios::binary);
    if (!os) fail("cannot write " + dir + "/df.bin");
    os.write(kDfMagic, 8);
    put<uint32_t>(os, kDsVersion);
    put<uint64_t>(os, static_cast<uint64_t>(ds.tfidf.df.size()));
    put<uint64_t>(os, static_cast<uint64_t>(ds.tfidf.n_docs));
    for (int64_t d : ds.tfidf.df) put<uint64_t>(os, static_cast<uint64_t>(d));
  }
  {
    std::ofstream os(dir + "/sparse.bin", std::ios::binary);
    if (!os) fail("cannot write " + dir + "/sparse.bin");
    os.write(kSparseMagic, 8);
    put<uint32_t>(os, kDsVersion);
    put<uint64_t>(os, static_cast<uint64_t>(ds.entries.size()));
    for (const auto& e : ds.entries) {
      put<uint32_t>(os, static_cast<uint32_t>(e.tfidf.size()));
      for (const auto& [t, w] : e.tfidf) {
        put<uint32_t>(os, static_cast<uint32_t>(t));
        put<float>(os, static_cast<float>(w));
      }
    }
  }
  {
    std::vector<float> dense(ds.entries.size() * static_cast<size_t>(ds.dense_dim));
    for (size_t i = 0; i < ds.entries.size(); ++i)
      std::copy(ds.entries[i].dense.begin(), ds.entries[i].dense.end(),
                dense.begin() + static_cast<int64_t>(i) * ds.dense_dim);
    write_tensor_file(dir + "/dense.bin",
                      {static_cast<int64_t>(ds.entries.size()), ds.dense_dim}, dense.data());
  }
  if (ds.vector_source == VectorSource::Tfidf) {
    std::vector<float> basis(static_cast<size_t>(ds.projector.basis.size()));
    for (Eigen::Index r = 0; r < ds.projector.basis.rows(); ++r)
      for (Eigen::Index c = 0; c < ds.projector.basis.cols(); ++c)
        basis[static_cast<size_t>(r * ds.projector.basis.cols() + c)] =
            static_cast<float>(ds.projector.basis(r, c));
    write_tensor_file(dir + "/projector.bin",
                      {ds.projector.basis.rows(), ds.projector.basis.cols()}, basis.data());
  }
}

Datastore load_datastore(const std::string& dir) {
  Datastore ds;
  {
    std::istringstream manifest(read_text_file(dir + "/manifest.jsonl"));
    std::string line;
    if (!std::getline(manifest, line)) fail("empty datastore manifest in " + dir);
    const json header = json::parse(line);
    ds.vector_source = header.at("vector_source").get<std::string>() == "tfidf"
                           ? VectorSource::Tfidf
                           : VectorSource::ExternalSentVec;
    ds.dense_dim = header.at("dense_dim").get<int32_t>();
    const auto n_entries = header.at("n_entries").get<size_t>();
    ds.entries.reserve(n_entries);
    while (std::getline(manifest, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      DatastoreEntry e;
      e.id = j.at("id").get<int32_t>();
      e.source = j.at("source").get<IdSeq>();
      e.target = j.at("target").get<IdSeq>();
      ds.entries.push_back(std::move(e));
    }
    if (ds.entries.size() != n_entries) fail("datastore manifest entry count mismatch in " + dir);
  }
  {
    const std::string path = dir + "/df.bin";
    std::ifstream is(path, std::ios::binary);
    if (!is) fail("cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kDfMagic, 8) != 0) fail("bad magic in " + path);
    if (get<uint32_t>(is, path) != kDsVersion) fail("unsupported version in " + path);
    const auto vocab = get<uint64_t>(is, path);
    ds.tfidf.n_docs = static_cast<int64_t>(get<uint64_t>(is, path));
    ds.tfidf.df.resize(vocab);
    for (auto& d : ds.tfidf.df) d = static_cast<int64_t>(get<uint64_t>(is, path));
    ds.tfidf.idf.resize(vocab);
    for (size_t t = 0; t < vocab; ++t)
      ds.tfidf.idf[t] = std::log((1.0 + static_cast<double>(ds.tfidf.n_docs)) /
                                 (1.0 + static_cast<double>(ds.tfidf.df[t]))) +
                        1.0;
  }
  {
    const std::string path = dir + "/sparse.bin";
    std::ifstream is(path, std::ios::binary);
    if (!is) fail("cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kSparseMagic, 8) != 0) fail("bad magic in " + path);
    if (get<uint32_t>(is, path) != kDsVersion) fail("unsupported version in " + path);
    const auto n = get<uint64_t>(is, path);
    if (n != ds.entries.size()) fail("sparse block entry count mismatch in " + dir);
    for (auto& e : ds.entries) {
      const auto nnz = get<uint32_t>(is, path);
      e.tfidf.resize(nnz);
      for (auto& [t, w] : e.tfidf) {
        t = static_cast<TokenId>(get<uint32_t>(is, path));
        w = get<float>(is, path);
      }
    }
  }
  {
    const TensorData dense = read_tensor_file(dir + "/dense.bin");
    if (dense.dims.size() != 2 || dense.dims[0] != static_cast<int64_t>(ds.entries.size()) ||
        dense.dims[1] != ds.dense_dim)
      fail("dense block shape mismatch in " + dir);
    for (size_t i = 0; i < ds.entries.size(); ++i) {
      const auto* begin = dense.values.data() + static_cast<int64_t>(i) * ds.dense_dim;
      ds.entries[i].dense.assign(begin, begin + ds.dense_dim);
    }
  }
  if (ds.vector_source == VectorSource::Tfidf) {
    const TensorData basis = read_tensor_file(dir + "/projector.bin");
    if (basis.dims.size() != 2 || basis.dims[0] != ds.dense_dim ||
        basis.dims[1] != ds.tfidf.vocab_size())
      fail("projector shape mismatch in " + dir);
    ds.projector.dim = ds.dense_dim;
    ds.projector.basis.resize(basis.dims[0], basis.dims[1]);
    for (int64_t r = 0; r < basis.dims[0]; ++r)
      for (int64_t c = 0; c < basis.dims[1]; ++c)
        ds.projector.basis(r, c) = basis.values[static_cast<size_t>(r * basis.dims[1] + c)];
  }
  ds.rebuild_index();
  return ds;
}

}  // namespace ne
