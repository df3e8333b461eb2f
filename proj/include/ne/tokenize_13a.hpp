#pragma once

#include <string>
#include <vector>

namespace ne {

// The 13a tokenizer used before every BLEU n-gram count: entity and newline
// normalization, then the four splitting passes (symbols; period/comma next
// to non-digits; dash after digit), then whitespace collapse. Byte-exact and
// order-sensitive; the golden-file test pins the behavior.
std::string tokenize_13a(const std::string& line);

std::vector<std::string> tokenize_13a_split(const std::string& line);

}  // namespace ne
