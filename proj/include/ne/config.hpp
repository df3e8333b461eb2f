#pragma once

#include <string>
#include <vector>

#include "ne/inference.hpp"
#include "ne/model_config.hpp"
#include "ne/retrieval.hpp"
#include "ne/training.hpp"

namespace ne {

struct Paths {
  std::string train_src, train_tgt;
  std::string dev_src, dev_tgt;
  std::string test_src, test_tgt;
  std::string vocab;
  std::string datastore_dir;
  std::string checkpoint_dir;
  std::string output_dir;
  std::string neighbors_train, neighbors_dev, neighbors_test;
  std::string external_vectors_train, external_vectors_dev, external_vectors_test;

  const std::string& src_for(const std::string& split) const;
  const std::string& tgt_for(const std::string& split) const;
  const std::string& neighbors_for(const std::string& split) const;
  const std::string& external_vectors_for(const std::string& split) const;
};

struct RunConfig {
  uint64_t seed = 42;
  int64_t vocab_max_size = 10000;
  int64_t bootstrap_resamples = 1000;
  std::string analyze_mode = "target_tfidf";  // or "source_table_match"
  Paths paths;
  ModelConfig model;
  TrainConfig train;
  InferConfig infer;
  RetrievalConfig retrieval;
};

// TOML subset: [section] headers, key = value with string/int/float/bool
// values, # comments. Overrides are "section.key=value" strings applied
// after the file. Unknown keys are errors.
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides);

RunConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides);

}  // namespace ne
