#pragma once

#include <string>

#include "ne/model.hpp"

namespace ne {

// Checkpoint directory: manifest.json (config, vocab hash, step, metric,
// tensor shapes) plus one binary tensor file per parameter under tensors/.
void save_checkpoint(const std::string& dir, const ModelParams& params, uint64_t vocab_hash,
                     int64_t step, double metric);

struct Checkpoint {
  ModelParams params;
  uint64_t vocab_hash = 0;
  int64_t step = 0;
  double metric = 0;
};

Checkpoint load_checkpoint(const std::string& dir);

}  // namespace ne
