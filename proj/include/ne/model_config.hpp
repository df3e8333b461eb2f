#pragma once

#include <cstdint>

#include "ne/common.hpp"

namespace ne {

struct ModelConfig {
  int32_t d_model = 64;
  int32_t d_hidden = 256;
  int32_t n_head = 4;
  int32_t n_layer = 2;
  int32_t k_max = 32;
  int32_t vocab_size = 0;
  int32_t max_positions = 256;
  double dropout = 0.3;
  bool tie_token_head = false;

  int32_t head_dim() const { return d_model / n_head; }

  void validate() const {
    if (d_model <= 0 || d_hidden <= 0 || n_head <= 0 || n_layer <= 0) fail("model dims must be positive");
    if (d_model % n_head != 0) fail("d_model must be divisible by n_head");
    if (k_max < 1) fail("k_max must be >= 1");
    if (vocab_size < kNumSpecials + 1) fail("vocab_size too small");
    if (max_positions < 2) fail("max_positions must be >= 2");
    if (dropout < 0.0 || dropout >= 1.0) fail("dropout must be in [0,1)");
  }
};

}  // namespace ne
