#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "ne/common.hpp"

namespace ne {

// ---------------------------------------------------------------------------
// BLEU-4, 13a tokenization, case-sensitive, exponential smoothing of zero
// n-gram precisions, single reference.
// ---------------------------------------------------------------------------

struct BleuStats {
  std::array<int64_t, 4> correct{};
  std::array<int64_t, 4> total{};
  int64_t sys_len = 0;
  int64_t ref_len = 0;

  BleuStats& operator+=(const BleuStats& o) {
    for (size_t n = 0; n < 4; ++n) {
      correct[n] += o.correct[n];
      total[n] += o.total[n];
    }
    sys_len += o.sys_len;
    ref_len += o.ref_len;
    return *this;
  }
};

BleuStats bleu_sentence_stats(const std::string& hyp, const std::string& ref);
double bleu_score(const BleuStats& stats);

double corpus_bleu(const std::vector<std::string>& hyps, const std::vector<std::string>& refs);
double sentence_bleu(const std::string& hyp, const std::string& ref);

// ---------------------------------------------------------------------------
// ChrF: character n-grams n=1..6, beta=2. Whitespace runs collapse to one
// space which counts as a character.
// ---------------------------------------------------------------------------

double corpus_chrf(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
                   bool include_whitespace = true);

// ---------------------------------------------------------------------------
// Paired bootstrap resampling: fraction of resamples where system b's corpus
// BLEU is at least system a's. Deterministic given seed.
// ---------------------------------------------------------------------------

double bootstrap_significance(const std::vector<std::string>& hyps_a,
                              const std::vector<std::string>& hyps_b,
                              const std::vector<std::string>& refs, int64_t n_resamples,
                              uint64_t seed);

// ---------------------------------------------------------------------------
// Similarity-vs-sentence-BLEU scatter data
// ---------------------------------------------------------------------------

struct ScatterRecord {
  int32_t pair_id = 0;
  double similarity = 0;
  double sentence_bleu = 0;
};

struct ScatterBin {
  double lo = 0, hi = 0;
  int64_t count = 0;
  double mean_bleu = 0;
};

struct ScatterSummary {
  double mean_similarity = 0;
  int64_t n = 0;
  int64_t skipped = 0;
  std::vector<ScatterBin> bins;
};

// One record per test pair with a known similarity; pairs missing from sims
// are skipped and counted. Bins are 0.1 wide over [0, 1.1].
std::pair<std::vector<ScatterRecord>, ScatterSummary> similarity_scatter(
    const std::vector<int32_t>& pair_ids, const std::unordered_map<int32_t, double>& sims,
    const std::vector<std::string>& hyps, const std::vector<std::string>& refs);

struct MetricReport {
  double bleu = 0;
  double chrf = 0;
  double mean_iterations = 0;
  double mean_latency_ms = 0;
  int64_t n_sentences = 0;
};

}  // namespace ne
