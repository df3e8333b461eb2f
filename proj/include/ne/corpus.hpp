#pragma once

#include <string>
#include <vector>

#include "ne/common.hpp"
#include "ne/vocab.hpp"

namespace ne {

struct ParallelPair {
  int32_t id = 0;
  IdSeq source;
  IdSeq target;
};

std::vector<std::string> read_lines(const std::string& path);

// Reads two aligned files (one tokenized sentence per line) and encodes them.
// Empty or misaligned lines are reported with file and line number.
std::vector<ParallelPair> load_parallel(const Vocabulary& vocab,
                                        const std::string& src_path,
                                        const std::string& tgt_path);

}  // namespace ne
