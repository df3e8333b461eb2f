#include "ne/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "ne/tokenize_13a.hpp"
#include "ne/vocab.hpp"

namespace ne {

namespace {

// n-gram keys joined with \x01, which cannot appear inside a 13a token
void count_ngrams(const std::vector<std::string>& tokens, size_t n,
                  std::unordered_map<std::string, int64_t>& out) {
  if (tokens.size() < n) return;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (size_t j = 1; j < n; ++j) {
      key += '\x01';
      key += tokens[i + j];
    }
    out[key] += 1;
  }
}

constexpr double kLogZero = -9999999999.0;

double safe_log(double x) { return x == 0.0 ? kLogZero : std::log(x); }

}  // namespace

BleuStats bleu_sentence_stats(const std::string& hyp, const std::string& ref) {
  const auto htok = tokenize_13a_split(hyp);
  const auto rtok = tokenize_13a_split(ref);
  BleuStats s;
  s.sys_len = static_cast<int64_t>(htok.size());
  s.ref_len = static_cast<int64_t>(rtok.size());
  for (size_t n = 1; n <= 4; ++n) {
    std::unordered_map<std::string, int64_t> hg, rg;
    count_ngrams(htok, n, hg);
    count_ngrams(rtok, n, rg);
    int64_t correct = 0, total = 0;
    for (const auto& [key, count] : hg) {
      total += count;
      auto it = rg.find(key);
      if (it != rg.end()) correct += std::min(count, it->second);
    }
    s.correct[n - 1] = correct;
    s.total[n - 1] = total;
  }
  return s;
}

double bleu_score(const BleuStats& s) {
  // effective order: n-gram orders the hypotheses cannot reach (total 0) drop
  // out of the geometric mean, so identity scores 100 on short corpora too
  double precisions[4] = {0, 0, 0, 0};
  double smooth = 1.0;
  size_t effective_order = 0;
  for (size_t n = 0; n < 4; ++n) {
    if (s.total[n] == 0) break;
    effective_order = n + 1;
    if (s.correct[n] == 0) {
      smooth *= 2.0;
      precisions[n] = 100.0 / (smooth * static_cast<double>(s.total[n]));
    } else {
      precisions[n] = 100.0 * static_cast<double>(s.correct[n]) / static_cast<double>(s.total[n]);
    }
  }
  if (effective_order == 0) return 0.0;
  double bp = 1.0;
  if (s.sys_len < s.ref_len)
    bp = s.sys_len > 0
             ? std::exp(1.0 - static_cast<double>(s.ref_len) / static_cast<double>(s.sys_len))
             : 0.0;
  double log_sum = 0;
  for (size_t n = 0; n < effective_order; ++n) log_sum += safe_log(precisions[n]);
  return bp * std::exp(log_sum / static_cast<double>(effective_order));
}

double corpus_bleu(const std::vector<std::string>& hyps, const std::vector<std::string>& refs) {
  if (hyps.size() != refs.size()) fail("corpus_bleu: hypothesis/reference count mismatch");
  if (hyps.empty()) fail("corpus_bleu: empty corpus");
  BleuStats total;
  for (size_t i = 0; i < hyps.size(); ++i) total += bleu_sentence_stats(hyps[i], refs[i]);
  return bleu_score(total);
}

double sentence_bleu(const std::string& hyp, const std::string& ref) {
  return bleu_score(bleu_sentence_stats(hyp, ref));
}

// ---------------------------------------------------------------------------
// ChrF
// ---------------------------------------------------------------------------

namespace {

constexpr size_t kChrfOrder = 6;
constexpr double kChrfBeta = 2.0;

std::vector<uint32_t> to_codepoints(const std::string& s) {
  std::vector<uint32_t> cps;
  size_t i = 0;
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    uint32_t cp;
    size_t len;
    if (c < 0x80) {
      cp = c;
      len = 1;
    } else if ((c >> 5) == 0x6) {
      cp = c & 0x1F;
      len = 2;
    } else if ((c >> 4) == 0xE) {
      cp = c & 0x0F;
      len = 3;
    } else if ((c >> 3) == 0x1E) {
      cp = c & 0x07;
      len = 4;
    } else {
      cp = 0xFFFD;  // stray byte
      len = 1;
    }
    for (size_t j = 1; j < len && i + j < s.size(); ++j) cp = (cp << 6) | (s[i + j] & 0x3F);
    cps.push_back(cp);
    i += len;
  }
  return cps;
}

std::vector<uint32_t> chrf_chars(const std::string& s, bool include_whitespace) {
  std::string collapsed;
  bool in_space = false;
  for (char raw : s) {
    const unsigned char c = static_cast<unsigned char>(raw);
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      in_space = true;
      continue;
    }
    if (in_space && !collapsed.empty() && include_whitespace) collapsed += ' ';
    in_space = false;
    collapsed += raw;
  }
  return to_codepoints(collapsed);
}

struct ChrfStats {
  std::array<int64_t, kChrfOrder> hyp{}, ref{}, match{};
};

void chrf_sentence(const std::vector<uint32_t>& h, const std::vector<uint32_t>& r, ChrfStats& s) {
  for (size_t n = 1; n <= kChrfOrder; ++n) {
    std::unordered_map<std::string, int64_t> hg, rg;
    auto collect = [n](const std::vector<uint32_t>& chars,
                       std::unordered_map<std::string, int64_t>& out) {
      if (chars.size() < n) return;
      for (size_t i = 0; i + n <= chars.size(); ++i) {
        std::string key(reinterpret_cast<const char*>(&chars[i]), n * sizeof(uint32_t));
        out[key] += 1;
      }
    };
    collect(h, hg);
    collect(r, rg);
    int64_t hyp_count = 0, match = 0;
    for (const auto& [key, count] : hg) {
      hyp_count += count;
      auto it = rg.find(key);
      if (it != rg.end()) match += std::min(count, it->second);
    }
    int64_t ref_count = 0;
    for (const auto& [key, count] : rg) ref_count += count;
    s.hyp[n - 1] += hyp_count;
    s.ref[n - 1] += ref_count;
    s.match[n - 1] += match;
  }
}

}  // namespace

double corpus_chrf(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
                   bool include_whitespace) {
  if (hyps.size() != refs.size()) fail("corpus_chrf: hypothesis/reference count mismatch");
  if (hyps.empty()) fail("corpus_chrf: empty corpus");
  ChrfStats s;
  for (size_t i = 0; i < hyps.size(); ++i)
    chrf_sentence(chrf_chars(hyps[i], include_whitespace), chrf_chars(refs[i], include_whitespace),
                  s);
  double avg_prec = 0, avg_rec = 0;
  int effective = 0;
  for (size_t n = 0; n < kChrfOrder; ++n) {
    if (s.hyp[n] > 0 && s.ref[n] > 0) {
      avg_prec += static_cast<double>(s.match[n]) / static_cast<double>(s.hyp[n]);
      avg_rec += static_cast<double>(s.match[n]) / static_cast<double>(s.ref[n]);
      ++effective;
    }
  }
  if (effective == 0) return 0.0;
  avg_prec /= effective;
  avg_rec /= effective;
  const double factor = kChrfBeta * kChrfBeta;
  if (avg_prec + avg_rec == 0) return 0.0;
  return 100.0 * (1 + factor) * avg_prec * avg_rec / (factor * avg_prec + avg_rec);
}

// ---------------------------------------------------------------------------
// Bootstrap
// ---------------------------------------------------------------------------

double bootstrap_significance(const std::vector<std::string>& hyps_a,
                              const std::vector<std::string>& hyps_b,
                              const std::vector<std::string>& refs, int64_t n_resamples,
                              uint64_t seed) {
  if (hyps_a.size() != refs.size() || hyps_b.size() != refs.size())
    fail("bootstrap_significance: misaligned inputs");
  if (refs.empty()) fail("bootstrap_significance: empty corpus");
  if (n_resamples < 100) fail("bootstrap_significance: need at least 100 resamples");
  const size_t n = refs.size();
  std::vector<BleuStats> stats_a(n), stats_b(n);
  for (size_t i = 0; i < n; ++i) {
    stats_a[i] = bleu_sentence_stats(hyps_a[i], refs[i]);
    stats_b[i] = bleu_sentence_stats(hyps_b[i], refs[i]);
  }
  Rng rng(seed);
  int64_t b_wins = 0;
  for (int64_t r = 0; r < n_resamples; ++r) {
    BleuStats sum_a, sum_b;
    for (size_t i = 0; i < n; ++i) {
      const size_t idx = static_cast<size_t>(rng.uniform_below(n));
      sum_a += stats_a[idx];
      sum_b += stats_b[idx];
    }
    if (bleu_score(sum_b) >= bleu_score(sum_a)) ++b_wins;
  }
  return static_cast<double>(b_wins) / static_cast<double>(n_resamples);
}

// ---------------------------------------------------------------------------
// Scatter
// ---------------------------------------------------------------------------

std::pair<std::vector<ScatterRecord>, ScatterSummary> similarity_scatter(
    const std::vector<int32_t>& pair_ids, const std::unordered_map<int32_t, double>& sims,
    const std::vector<std::string>& hyps, const std::vector<std::string>& refs) {
  if (pair_ids.size() != hyps.size() || hyps.size() != refs.size())
    fail("similarity_scatter: misaligned inputs");
  std::vector<ScatterRecord> records;
  ScatterSummary summary;
  constexpr size_t kBins = 11;  // 0.1-wide over [0, 1.1] to cover TableMatch
  std::vector<double> bin_bleu(kBins, 0.0);
  std::vector<int64_t> bin_count(kBins, 0);
  double sim_sum = 0;
  for (size_t i = 0; i < pair_ids.size(); ++i) {
    auto it = sims.find(pair_ids[i]);
    if (it == sims.end()) {
      summary.skipped += 1;
      continue;
    }
    ScatterRecord rec;
    rec.pair_id = pair_ids[i];
    rec.similarity = it->second;
    rec.sentence_bleu = sentence_bleu(hyps[i], refs[i]);
    size_t bin = static_cast<size_t>(std::min(std::max(rec.similarity, 0.0), 1.0999) * 10.0);
    bin = std::min(bin, kBins - 1);
    bin_bleu[bin] += rec.sentence_bleu;
    bin_count[bin] += 1;
    sim_sum += rec.similarity;
    records.push_back(rec);
  }
  summary.n = static_cast<int64_t>(records.size());
  if (summary.n == 0) fail("similarity_scatter: no records");
  summary.mean_similarity = sim_sum / static_cast<double>(summary.n);
  for (size_t b = 0; b < kBins; ++b) {
    ScatterBin bin;
    bin.lo = 0.1 * static_cast<double>(b);
    bin.hi = 0.1 * static_cast<double>(b + 1);
    bin.count = bin_count[b];
    bin.mean_bleu = bin_count[b] > 0 ? bin_bleu[b] / static_cast<double>(bin_count[b]) : 0.0;
    summary.bins.push_back(bin);
  }
  return {std::move(records), summary};
}

}  // namespace ne
