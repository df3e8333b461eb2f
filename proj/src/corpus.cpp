#include "ne/corpus.hpp"

#include <fstream>

namespace ne {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::vector<ParallelPair> load_parallel(const Vocabulary& vocab,
                                        const std::string& src_path,
                                        const std::string& tgt_path) {
  auto src_lines = read_lines(src_path);
  auto tgt_lines = read_lines(tgt_path);
  if (src_lines.size() != tgt_lines.size())
    fail("parallel corpus length mismatch: " + src_path + " has " +
         std::to_string(src_lines.size()) + " lines, " + tgt_path + " has " +
         std::to_string(tgt_lines.size()));
  std::vector<ParallelPair> pairs;
  pairs.reserve(src_lines.size());
  for (size_t i = 0; i < src_lines.size(); ++i) {
    ParallelPair p;
    p.id = static_cast<int32_t>(i);
    p.source = vocab.encode(src_lines[i]);
    p.target = vocab.encode(tgt_lines[i]);
    if (p.source.empty()) fail(src_path + " line " + std::to_string(i + 1) + ": empty sentence");
    if (p.target.empty()) fail(tgt_path + " line " + std::to_string(i + 1) + ": empty sentence");
    pairs.push_back(std::move(p));
  }
  return pairs;
}

}  // namespace ne
