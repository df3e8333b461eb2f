#pragma once

#include <set>
#include <string>

#include "ne/common.hpp"

namespace ne {

// Parsed serialized infobox: whitespace-separated "field:value" tokens.
// Positional suffixes on field names ("name_1") collapse to the field type.
struct Infobox {
  std::set<std::string> fields;
  std::set<std::string> values;
};

Infobox parse_infobox(const std::string& line);

// F1 of the field-type sets plus 0.1 * F1 of the value unigram sets;
// F1 of two empty sets is 0. Range [0, 1.1], symmetric.
double table_match(const std::string& a, const std::string& b);

double set_f1(const std::set<std::string>& a, const std::set<std::string>& b);

}  // namespace ne
