#pragma once

#include <string>

#include "ne/config.hpp"

namespace ne {

// Pipeline commands behind the CLI. Each throws ne::Error on failure and
// writes its artifacts under the configured paths.

void cmd_build_datastore(const RunConfig& cfg);

void cmd_retrieve(const RunConfig& cfg, const std::string& split);

// Returns the path of the best checkpoint.
std::string cmd_train(const RunConfig& cfg);

struct GenerateSummary {
  int64_t n_sentences = 0;
  double mean_iterations = 0;
  double mean_latency_ms = 0;
  int64_t empty_fallbacks = 0;
  std::string hyps_path;
};

GenerateSummary cmd_generate(const RunConfig& cfg, const std::string& checkpoint,
                             const std::string& split, const std::string& init_mode,
                             bool write_trace);

// Metric report as a JSON string (also printed by the CLI).
std::string cmd_evaluate(const RunConfig& cfg, const std::string& hyps_path,
                         const std::string& refs_path, const std::string& hyps_b_path = "");

std::string cmd_analyze(const RunConfig& cfg, const std::string& split,
                        const std::string& hyps_path);

// Worker cap: NEIGHBOREDIT_THREADS, else hardware concurrency.
int worker_count();

}  // namespace ne
