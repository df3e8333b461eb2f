#include "ne/commands.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <mutex>
#include <sstream>
#include <thread>

#include "ne/checkpoint.hpp"
#include "ne/corpus.hpp"
#include "ne/io.hpp"
#include "ne/metrics.hpp"
#include "ne/table_match.hpp"

namespace ne {

using json = nlohmann::ordered_json;

int worker_count() {
  if (const char* env = std::getenv("NEIGHBOREDIT_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {

// Deterministic-order parallel map: results land by index.
void parallel_for(size_t n, const std::function<void(size_t)>& fn) {
  const int workers = std::min<int>(worker_count(), static_cast<int>(n));
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> threads;
  threads.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& t : threads) t.join();
}

std::vector<std::string> both_side_lines(const RunConfig& cfg) {
  auto lines = read_lines(cfg.paths.train_src);
  auto tgt = read_lines(cfg.paths.train_tgt);
  lines.insert(lines.end(), tgt.begin(), tgt.end());
  return lines;
}

struct NeighborLookup {
  std::unordered_map<int32_t, NeighborRow> rows;

  static NeighborLookup from_file(const std::string& path) {
    NeighborLookup nl;
    for (const auto& row : load_neighbors(path)) nl.rows[row.query_id] = row;
    return nl;
  }
  const NeighborRow* find(int32_t query_id) const {
    auto it = rows.find(query_id);
    return it == rows.end() ? nullptr : &it->second;
  }
};

std::string json_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void ensure_parent_dir(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) ensure_dir(parent.string());
}

}  // namespace

void cmd_build_datastore(const RunConfig& cfg) {
  const Vocabulary vocab =
      Vocabulary::build(both_side_lines(cfg), static_cast<size_t>(cfg.vocab_max_size));
  ensure_parent_dir(cfg.paths.vocab);
  vocab.save(cfg.paths.vocab);
  const auto pairs = load_parallel(vocab, cfg.paths.train_src, cfg.paths.train_tgt);

  std::vector<IdSeq> sources;
  sources.reserve(pairs.size());
  for (const auto& p : pairs) sources.push_back(p.source);
  const TfidfModel tfidf = fit_tfidf(sources, static_cast<int32_t>(vocab.size()));

  Datastore ds;
  if (!cfg.paths.external_vectors_train.empty()) {
    const ExternalVectors ext = load_external_vectors(cfg.paths.external_vectors_train);
    ds = build_datastore(pairs, tfidf, DenseProjector{}, &ext);
  } else {
    const DenseProjector proj = fit_projector(tfidf, sources, cfg.retrieval.dim, cfg.seed);
    ds = build_datastore(pairs, tfidf, proj, nullptr);
  }
  save_datastore(cfg.paths.datastore_dir, ds);
  std::cout << "datastore entries: " << ds.entries.size() << "\n";
}

void cmd_retrieve(const RunConfig& cfg, const std::string& split) {
  const Vocabulary vocab = Vocabulary::load(cfg.paths.vocab);
  const Datastore ds = load_datastore(cfg.paths.datastore_dir);
  const auto query_lines = read_lines(cfg.paths.src_for(split));

  RetrievalConfig rcfg = cfg.retrieval;
  rcfg.exclude_self = split == "train";

  ExternalVectors ext;
  const bool external = ds.vector_source == VectorSource::ExternalSentVec;
  if (external) {
    const std::string& path = cfg.paths.external_vectors_for(split);
    if (path.empty()) fail("external-vector datastore needs external_vectors_" + split);
    ext = load_external_vectors(path);
  }

  std::vector<NeighborRow> rows(query_lines.size());
  std::vector<double> elapsed_ms(query_lines.size(), 0.0);
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex err_mu;
  parallel_for(query_lines.size(), [&](size_t i) {
    if (failed.load()) return;
    try {
      const IdSeq query = vocab.encode(query_lines[i]);
      const std::vector<float>* qvec = nullptr;
      if (external) {
        auto it = ext.find(static_cast<int32_t>(i));
        if (it == ext.end()) fail("missing external vector for query id " + std::to_string(i));
        qvec = &it->second;
      }
      const auto t0 = std::chrono::steady_clock::now();
      const RetrievalResult r =
          retrieve(ds, query, qvec, rcfg,
                   split == "train" ? std::optional<int32_t>(static_cast<int32_t>(i)) : std::nullopt);
      elapsed_ms[i] =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      rows[i] = NeighborRow{static_cast<int32_t>(i), r.neighbor_id, r.rerank_score, r.dense_score};
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(err_mu);
      if (!failed.exchange(true)) first_error = e.what();
    }
  });
  if (failed.load()) fail("retrieve(" + split + "): " + first_error);

  const std::string& out_path = cfg.paths.neighbors_for(split);
  ensure_parent_dir(out_path);
  save_neighbors(out_path, rows);
  double mean_ms = 0;
  for (double ms : elapsed_ms) mean_ms += ms;
  mean_ms = rows.empty() ? 0 : mean_ms / static_cast<double>(rows.size());
  json stats{{"n_queries", rows.size()}, {"mean_retrieval_ms", mean_ms}};
  write_text_file(out_path + ".stats.json", stats.dump(2) + "\n");
  std::cout << "neighbors written: " << rows.size() << " (" << out_path << ")\n";
}

namespace {

// neighbor targets for training come straight from the datastore
std::unordered_map<int32_t, IdSeq> neighbor_targets(const NeighborLookup& nl, const Datastore& ds) {
  std::unordered_map<int32_t, IdSeq> out;
  for (const auto& [qid, row] : nl.rows) {
    const DatastoreEntry* e = ds.find(row.neighbor_id);
    if (e != nullptr) out[qid] = e->target;
  }
  return out;
}

struct DevSet {
  std::vector<IdSeq> sources;
  std::vector<std::string> refs;
  std::vector<const NeighborRow*> rows;
};

double dev_bleu(const ModelParams& params, const DevSet& dev, const Datastore& ds,
                const Vocabulary& vocab, const InferConfig& infer) {
  std::vector<std::string> hyps(dev.sources.size());
  parallel_for(dev.sources.size(), [&](size_t i) {
    Canvas init;
    InitKind kind = InitKind::Empty;
    const NeighborRow* row = dev.rows[i];
    if (row != nullptr) {
      const DatastoreEntry* e = ds.find(row->neighbor_id);
      if (e != nullptr &&
          static_cast<int64_t>(e->target.size()) + 2 <= infer.max_positions) {
        std::tie(init, kind) = select_init(row->rerank_score, e->target, infer.beta);
      }
    }
    ModelDecider decider(params, dev.sources[i]);
    InferConfig quiet = infer;
    quiet.keep_steps = false;
    const GenerationTrace trace = generate(decider, init, kind, quiet);
    hyps[i] = vocab.decode(trace.output);
  });
  return corpus_bleu(hyps, dev.refs);
}

}  // namespace

std::string cmd_train(const RunConfig& cfg) {
  const Vocabulary vocab = Vocabulary::load(cfg.paths.vocab);
  const Datastore ds = load_datastore(cfg.paths.datastore_dir);
  const auto train_pairs = load_parallel(vocab, cfg.paths.train_src, cfg.paths.train_tgt);
  const NeighborLookup train_nl = NeighborLookup::from_file(cfg.paths.neighbors_train);
  const auto neighbors = neighbor_targets(train_nl, ds);

  DevSet dev;
  NeighborLookup dev_nl;
  {
    const auto dev_pairs = load_parallel(vocab, cfg.paths.dev_src, cfg.paths.dev_tgt);
    dev.refs = read_lines(cfg.paths.dev_tgt);
    if (!cfg.paths.neighbors_dev.empty() && file_exists(cfg.paths.neighbors_dev))
      dev_nl = NeighborLookup::from_file(cfg.paths.neighbors_dev);
    for (const auto& p : dev_pairs) {
      dev.sources.push_back(p.source);
      dev.rows.push_back(dev_nl.find(p.id));
    }
  }

  ModelConfig mcfg = cfg.model;
  mcfg.vocab_size = static_cast<int32_t>(vocab.size());
  mcfg.validate();

  ensure_dir(cfg.paths.checkpoint_dir);
  ensure_dir(cfg.paths.output_dir);
  std::ofstream log_file(cfg.paths.output_dir + "/train_log.jsonl", std::ios::binary);
  if (!log_file) fail("cannot write training log");

  const uint64_t vhash = vocab.hash();
  EvalHook eval = [&](const ModelParams& params, int64_t step) {
    (void)step;
    return dev_bleu(params, dev, ds, vocab, cfg.infer);
  };
  CheckpointHook save = [&](const ModelParams& params, int64_t step, double metric) {
    save_checkpoint(cfg.paths.checkpoint_dir + "/step_" + std::to_string(step), params, vhash,
                    step, metric);
  };
  LogHook log = [&](int64_t step, double lr, const LossBreakdown& loss,
                    const PolicyCounters& pc) {
    json j{{"step", step},
           {"lr", lr},
           {"loss", loss.total},
           {"del_loss", loss.del_loss},
           {"plh_loss", loss.plh_loss},
           {"tok_loss", loss.tok_loss},
           {"policy",
            {{"neighbor_neighbor", pc.neighbor_neighbor},
             {"neighbor_target", pc.neighbor_target},
             {"target_target", pc.target_target},
             {"missing_neighbor", pc.missing_neighbor},
             {"clipped_plh", pc.clipped_plh}}}};
    log_file << j.dump() << "\n";
  };

  const TrainResult result = train_loop(train_pairs, neighbors, mcfg, cfg.train, eval, save, log);
  const std::string best_dir = cfg.paths.checkpoint_dir + "/best";
  save_checkpoint(best_dir, result.best_params, vhash, result.best_step, result.best_metric);
  std::cout << "best checkpoint: step " << result.best_step << ", dev BLEU "
            << json_double(result.best_metric) << " (" << best_dir << ")\n";
  return best_dir;
}

GenerateSummary cmd_generate(const RunConfig& cfg, const std::string& checkpoint,
                             const std::string& split, const std::string& init_mode,
                             bool write_trace) {
  if (init_mode != "neighbor" && init_mode != "empty")
    fail("init mode must be \"neighbor\" or \"empty\"");
  const Vocabulary vocab = Vocabulary::load(cfg.paths.vocab);
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  if (ckpt.vocab_hash != vocab.hash())
    fail("checkpoint was trained with a different vocabulary");

  const auto src_lines = read_lines(cfg.paths.src_for(split));
  std::vector<IdSeq> sources(src_lines.size());
  for (size_t i = 0; i < src_lines.size(); ++i) sources[i] = vocab.encode(src_lines[i]);

  Datastore ds;
  NeighborLookup nl;
  double mean_retrieval_ms = 0;
  const bool neighbor_mode = init_mode == "neighbor";
  if (neighbor_mode) {
    ds = load_datastore(cfg.paths.datastore_dir);
    const std::string& npath = cfg.paths.neighbors_for(split);
    nl = NeighborLookup::from_file(npath);
    if (file_exists(npath + ".stats.json")) {
      const json stats = json::parse(read_text_file(npath + ".stats.json"));
      mean_retrieval_ms = stats.value("mean_retrieval_ms", 0.0);
    }
  }

  // the clip and length cap belong to the trained model, not the config file
  InferConfig icfg = cfg.infer;
  icfg.k_max = ckpt.params.cfg.k_max;
  icfg.max_positions = ckpt.params.cfg.max_positions;
  icfg.keep_steps = write_trace;

  std::vector<GenerationTrace> traces(sources.size());
  std::atomic<int64_t> fallbacks{0};
  parallel_for(sources.size(), [&](size_t i) {
    Canvas init;
    InitKind kind = InitKind::Empty;
    double retrieval_ms = 0;
    if (neighbor_mode) {
      retrieval_ms = mean_retrieval_ms;
      const NeighborRow* row = nl.find(static_cast<int32_t>(i));
      const DatastoreEntry* e = row != nullptr ? ds.find(row->neighbor_id) : nullptr;
      if (e != nullptr &&
          static_cast<int64_t>(e->target.size()) + 2 <= icfg.max_positions) {
        std::tie(init, kind) = select_init(row->rerank_score, e->target, icfg.beta);
      } else {
        fallbacks.fetch_add(1);
      }
    }
    ModelDecider decider(ckpt.params, sources[i]);
    traces[i] = generate(decider, init, kind, icfg, retrieval_ms);
  });

  ensure_dir(cfg.paths.output_dir);
  const std::string base = cfg.paths.output_dir + "/hyps_" + split + "_" + init_mode;
  const std::string hyps_path = base + ".txt";
  {
    std::ostringstream os;
    for (const auto& t : traces) os << vocab.decode(t.output) << "\n";
    write_text_file(hyps_path, os.str());
  }

  GenerateSummary summary;
  summary.n_sentences = static_cast<int64_t>(traces.size());
  summary.empty_fallbacks = fallbacks.load();
  summary.hyps_path = hyps_path;
  int64_t truncated = 0;
  for (const auto& t : traces) {
    summary.mean_iterations += t.iterations;
    summary.mean_latency_ms += t.latency_ms;
    truncated += t.truncated_insertions;
  }
  if (truncated > 0)
    std::cerr << "warning: " << truncated
              << " placeholders truncated to fit max_positions across the split\n";
  if (!traces.empty()) {
    summary.mean_iterations /= static_cast<double>(traces.size());
    summary.mean_latency_ms /= static_cast<double>(traces.size());
  }
  {
    json stats{{"n_sentences", summary.n_sentences},
               {"mean_iterations", summary.mean_iterations},
               {"mean_latency_ms", summary.mean_latency_ms},
               {"empty_fallbacks", summary.empty_fallbacks},
               {"init_mode", init_mode}};
    write_text_file(hyps_path + ".stats.json", stats.dump(2) + "\n");
  }
  if (write_trace) {
    std::ostringstream os;
    auto canvas_text = [&](const Canvas& c) {
      std::string s;
      for (size_t k = 0; k < c.tokens.size(); ++k) {
        if (k > 0) s += ' ';
        s += vocab.id_to_token(c.tokens[k]);
      }
      return s;
    };
    for (size_t i = 0; i < traces.size(); ++i) {
      json steps = json::array();
      for (const auto& st : traces[i].steps)
        steps.push_back(json{{"before", canvas_text(st.before)},
                             {"after_del", canvas_text(st.after_del)},
                             {"after_plh", canvas_text(st.after_plh)},
                             {"after_fill", canvas_text(st.after_fill)}});
      json j{{"id", i},
             {"init", traces[i].init_kind == InitKind::Neighbor ? "neighbor" : "empty"},
             {"iterations", traces[i].iterations},
             {"latency_ms", traces[i].latency_ms},
             {"retrieval_ms", traces[i].retrieval_ms},
             {"output", vocab.decode(traces[i].output)},
             {"steps", steps}};
      os << j.dump() << "\n";
    }
    write_text_file(base + ".trace.jsonl", os.str());
  }
  std::cout << "generated " << summary.n_sentences << " sentences, mean iterations "
            << json_double(summary.mean_iterations) << ", mean latency "
            << json_double(summary.mean_latency_ms) << " ms, fallbacks "
            << summary.empty_fallbacks << "\n";
  return summary;
}

std::string cmd_evaluate(const RunConfig& cfg, const std::string& hyps_path,
                         const std::string& refs_path, const std::string& hyps_b_path) {
  const auto hyps = read_lines(hyps_path);
  const auto refs = read_lines(refs_path);
  if (hyps.size() != refs.size())
    fail("evaluate: " + hyps_path + " has " + std::to_string(hyps.size()) + " lines, " +
         refs_path + " has " + std::to_string(refs.size()));

  MetricReport report;
  report.n_sentences = static_cast<int64_t>(hyps.size());
  report.bleu = corpus_bleu(hyps, refs);
  report.chrf = corpus_chrf(hyps, refs);
  if (file_exists(hyps_path + ".stats.json")) {
    const json stats = json::parse(read_text_file(hyps_path + ".stats.json"));
    report.mean_iterations = stats.value("mean_iterations", 0.0);
    report.mean_latency_ms = stats.value("mean_latency_ms", 0.0);
  }
  json j{{"bleu", report.bleu},
         {"chrf", report.chrf},
         {"mean_iterations", report.mean_iterations},
         {"mean_latency_ms", report.mean_latency_ms},
         {"n_sentences", report.n_sentences}};
  if (!hyps_b_path.empty()) {
    const auto hyps_b = read_lines(hyps_b_path);
    if (hyps_b.size() != refs.size()) fail("evaluate: hyps_b line count mismatch");
    j["bleu_b"] = corpus_bleu(hyps_b, refs);
    j["bootstrap_p"] =
        bootstrap_significance(hyps, hyps_b, refs, cfg.bootstrap_resamples, cfg.seed);
  }
  return j.dump(2);
}

std::string cmd_analyze(const RunConfig& cfg, const std::string& split,
                        const std::string& hyps_path) {
  const Vocabulary vocab = Vocabulary::load(cfg.paths.vocab);
  const Datastore ds = load_datastore(cfg.paths.datastore_dir);
  const NeighborLookup nl = NeighborLookup::from_file(cfg.paths.neighbors_for(split));
  const auto hyps = read_lines(hyps_path);
  const auto refs = read_lines(cfg.paths.tgt_for(split));
  const auto src_lines = read_lines(cfg.paths.src_for(split));
  if (hyps.size() != refs.size()) fail("analyze: hypothesis/reference count mismatch");

  std::vector<int32_t> ids(hyps.size());
  for (size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int32_t>(i);

  std::unordered_map<int32_t, double> sims;
  if (cfg.analyze_mode == "target_tfidf") {
    std::vector<IdSeq> targets;
    targets.reserve(ds.entries.size());
    for (const auto& e : ds.entries) targets.push_back(e.target);
    const TfidfModel target_tfidf = fit_tfidf(targets, static_cast<int32_t>(vocab.size()));
    const auto tgt_lines = read_lines(cfg.paths.tgt_for(split));
    for (size_t i = 0; i < ids.size(); ++i) {
      const NeighborRow* row = nl.find(ids[i]);
      const DatastoreEntry* e = row != nullptr ? ds.find(row->neighbor_id) : nullptr;
      if (e == nullptr) continue;
      sims[ids[i]] = tfidf_cosine(target_tfidf, vocab.encode(tgt_lines[i]), e->target);
    }
  } else if (cfg.analyze_mode == "source_table_match") {
    for (size_t i = 0; i < ids.size(); ++i) {
      const NeighborRow* row = nl.find(ids[i]);
      const DatastoreEntry* e = row != nullptr ? ds.find(row->neighbor_id) : nullptr;
      if (e == nullptr) continue;
      sims[ids[i]] = table_match(src_lines[i], vocab.decode(e->source));
    }
  } else {
    fail("analyze_mode must be \"target_tfidf\" or \"source_table_match\"");
  }

  const auto [records, summary] = similarity_scatter(ids, sims, hyps, refs);
  std::ostringstream os;
  for (const auto& r : records)
    os << json{{"id", r.pair_id}, {"similarity", r.similarity}, {"sentence_bleu", r.sentence_bleu}}
              .dump()
       << "\n";
  json bins = json::array();
  for (const auto& b : summary.bins)
    bins.push_back(
        json{{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}, {"mean_bleu", b.mean_bleu}});
  const json summary_json{{"mean_similarity", summary.mean_similarity},
                          {"n", summary.n},
                          {"skipped", summary.skipped},
                          {"bins", bins}};
  os << summary_json.dump() << "\n";
  ensure_dir(cfg.paths.output_dir);
  const std::string out_path = cfg.paths.output_dir + "/scatter_" + split + ".jsonl";
  write_text_file(out_path, os.str());
  std::cout << "scatter records: " << summary.n << ", mean similarity "
            << json_double(summary.mean_similarity) << " (" << out_path << ")\n";
  return summary_json.dump(2);
}

}  // namespace ne
