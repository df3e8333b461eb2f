#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "ne/common.hpp"

namespace ne {

// Token <-> id mapping. Ids 0-4 are the specials (BOS, EOS, PLH, UNK, PAD),
// immutable after construction.
class Vocabulary {
 public:
  static const std::vector<std::string>& special_strings();

  // Builds from whitespace-tokenized lines: the 5 specials plus up to
  // max_size-5 most frequent corpus tokens, ties broken by first appearance.
  // Corpus occurrences of the special strings themselves are not mapped.
  static Vocabulary build(const std::vector<std::string>& lines, size_t max_size);

  static Vocabulary load(const std::string& path);
  void save(const std::string& path) const;

  size_t size() const { return id_to_token_.size(); }

  TokenId token_to_id(const std::string& tok) const;  // OOV -> kUnk
  const std::string& id_to_token(TokenId id) const;   // invalid -> throws

  IdSeq encode(const std::string& line) const;
  // Specials are dropped from surface output except UNK ("<unk>").
  std::string decode(const IdSeq& ids) const;

  // FNV-1a over the token list; used to bind checkpoints to a vocabulary.
  uint64_t hash() const;

 private:
  Vocabulary();
  void push_token(const std::string& tok);

  std::unordered_map<std::string, TokenId> token_to_id_;
  std::vector<std::string> id_to_token_;
};

std::vector<std::string> split_tokens(const std::string& line);

}  // namespace ne
