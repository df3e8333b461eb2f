#include "ne/table_match.hpp"

#include <algorithm>

#include "ne/vocab.hpp"

namespace ne {

namespace {

// strips one trailing "_<digits>" positional suffix
std::string field_type(const std::string& raw) {
  const size_t us = raw.rfind('_');
  if (us == std::string::npos || us + 1 >= raw.size()) return raw;
  for (size_t i = us + 1; i < raw.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(raw[i]))) return raw;
  return raw.substr(0, us);
}

}  // namespace

Infobox parse_infobox(const std::string& line) {
  Infobox box;
  for (const auto& tok : split_tokens(line)) {
    const size_t colon = tok.find(':');
    if (colon == std::string::npos || colon == 0)
      fail("infobox parse failure at token \"" + tok + "\" in line: " + line);
    box.fields.insert(field_type(tok.substr(0, colon)));
    const std::string value = tok.substr(colon + 1);
    if (!value.empty()) box.values.insert(value);
  }
  return box;
}

double set_f1(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  size_t common = 0;
  for (const auto& x : a)
    if (b.count(x) > 0) ++common;
  const double denom = static_cast<double>(a.size() + b.size());
  if (denom == 0) return 0.0;
  return 2.0 * static_cast<double>(common) / denom;
}

double table_match(const std::string& a, const std::string& b) {
  const Infobox ia = parse_infobox(a);
  const Infobox ib = parse_infobox(b);
  return set_f1(ia.fields, ib.fields) + 0.1 * set_f1(ia.values, ib.values);
}

}  // namespace ne
