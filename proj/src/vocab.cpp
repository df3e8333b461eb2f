#include "ne/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace ne {

const std::vector<std::string>& Vocabulary::special_strings() {
  static const std::vector<std::string> specials = {"<s>", "</s>", "[PLH]", "<unk>", "<pad>"};
  return specials;
}

Vocabulary::Vocabulary() {
  for (const auto& s : special_strings()) push_token(s);
}

void Vocabulary::push_token(const std::string& tok) {
  token_to_id_.emplace(tok, static_cast<TokenId>(id_to_token_.size()));
  id_to_token_.push_back(tok);
}

std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> out;
  size_t i = 0;
  const size_t n = line.size();
  while (i < n) {
    while (i < n && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r' || line[i] == '\n')) ++i;
    size_t j = i;
    while (j < n && line[j] != ' ' && line[j] != '\t' && line[j] != '\r' && line[j] != '\n') ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& lines, size_t max_size) {
  if (max_size < static_cast<size_t>(kNumSpecials) + 1) fail("max_size must be at least 6");
  struct Entry {
    int64_t freq = 0;
    int64_t first_seen = 0;
  };
  std::unordered_map<std::string, Entry> counts;
  int64_t order = 0;
  int64_t total_tokens = 0;
  const auto& specials = special_strings();
  for (const auto& line : lines) {
    for (auto& tok : split_tokens(line)) {
      ++total_tokens;
      // Literal special strings in corpus text are escaped to UNK, never mapped.
      if (std::find(specials.begin(), specials.end(), tok) != specials.end()) continue;
      auto [it, inserted] = counts.emplace(tok, Entry{});
      if (inserted) it->second.first_seen = order++;
      it->second.freq += 1;
    }
  }
  if (total_tokens == 0) fail("empty corpus");

  std::vector<std::pair<std::string, Entry>> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second.freq != b.second.freq) return a.second.freq > b.second.freq;
    return a.second.first_seen < b.second.first_seen;
  });

  Vocabulary v;
  const size_t capacity = max_size - kNumSpecials;
  for (size_t i = 0; i < sorted.size() && i < capacity; ++i) v.push_token(sorted[i].first);
  return v;
}

TokenId Vocabulary::token_to_id(const std::string& tok) const {
  auto it = token_to_id_.find(tok);
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::id_to_token(TokenId id) const {
  if (id < 0 || static_cast<size_t>(id) >= id_to_token_.size()) fail("invalid id");
  return id_to_token_[id];
}

IdSeq Vocabulary::encode(const std::string& line) const {
  IdSeq out;
  const auto& specials = special_strings();
  for (auto& tok : split_tokens(line)) {
    if (std::find(specials.begin(), specials.end(), tok) != specials.end()) {
      out.push_back(kUnk);
    } else {
      out.push_back(token_to_id(tok));
    }
  }
  return out;
}

std::string Vocabulary::decode(const IdSeq& ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (id < 0 || static_cast<size_t>(id) >= id_to_token_.size()) fail("invalid id");
    if (is_special(id) && id != kUnk) continue;
    if (!out.empty()) out += ' ';
    out += id_to_token_[id];
  }
  return out;
}

uint64_t Vocabulary::hash() const {
  uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& tok : id_to_token_) {
    for (unsigned char c : tok) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    h ^= static_cast<unsigned char>('\n');
    h *= 0x100000001b3ull;
  }
  return h;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail("cannot write vocabulary file: " + path);
  for (const auto& tok : id_to_token_) os << tok << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail("cannot open vocabulary file: " + path);
  Vocabulary v;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no;
    if (line_no <= static_cast<size_t>(kNumSpecials)) {
      if (line != special_strings()[line_no - 1])
        fail("vocabulary file " + path + " line " + std::to_string(line_no) +
             ": expected special token header");
      continue;
    }
    if (line.empty()) fail("vocabulary file " + path + " line " + std::to_string(line_no) + ": empty token");
    v.push_token(line);
  }
  if (line_no < static_cast<size_t>(kNumSpecials)) fail("vocabulary file " + path + ": truncated header");
  return v;
}

}  // namespace ne
