#include "ne/tokenize_13a.hpp"

#include "ne/vocab.hpp"

namespace ne {

namespace {

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

inline bool is_digit_byte(unsigned char c) { return c >= '0' && c <= '9'; }

// [{-~], [[-`], [ -&], [(-+], [:-@], and /
inline bool is_split_symbol(unsigned char c) {
  return (c >= 0x7B && c <= 0x7E) || (c >= 0x5B && c <= 0x60) || (c >= 0x20 && c <= 0x26) ||
         (c >= 0x28 && c <= 0x2B) || (c >= 0x3A && c <= 0x40) || c == 0x2F;
}

inline bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::string tokenize_13a(const std::string& line) {
  std::string s = line;
  replace_all(s, "<skipped>", "");
  replace_all(s, "-\n", "");
  replace_all(s, "\n", " ");
  replace_all(s, "\t", " ");
  if (s.find('&') != std::string::npos) {
    replace_all(s, "&quot;", "\"");
    replace_all(s, "&amp;", "&");
    replace_all(s, "&lt;", "<");
    replace_all(s, "&gt;", ">");
  }
  s = " " + s + " ";

  // pass 1: space out symbols
  std::string t;
  t.reserve(s.size() * 2);
  for (unsigned char c : s) {
    if (is_split_symbol(c)) {
      t += ' ';
      t += static_cast<char>(c);
      t += ' ';
    } else {
      t += static_cast<char>(c);
    }
  }

  // pass 2: non-digit followed by period/comma -> "c . "
  s.clear();
  s.reserve(t.size() * 2);
  for (size_t i = 0; i < t.size();) {
    const unsigned char c = static_cast<unsigned char>(t[i]);
    if (i + 1 < t.size() && !is_digit_byte(c) && (t[i + 1] == '.' || t[i + 1] == ',')) {
      s += t[i];
      s += ' ';
      s += t[i + 1];
      s += ' ';
      i += 2;
    } else {
      s += t[i];
      i += 1;
    }
  }

  // pass 3: period/comma followed by non-digit -> " . c"
  t.clear();
  t.reserve(s.size() * 2);
  for (size_t i = 0; i < s.size();) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    if ((c == '.' || c == ',') && i + 1 < s.size() &&
        !is_digit_byte(static_cast<unsigned char>(s[i + 1]))) {
      t += ' ';
      t += s[i];
      t += ' ';
      t += s[i + 1];
      i += 2;
    } else {
      t += s[i];
      i += 1;
    }
  }

  // pass 4: digit followed by dash -> "d - "
  s.clear();
  s.reserve(t.size() * 2);
  for (size_t i = 0; i < t.size();) {
    const unsigned char c = static_cast<unsigned char>(t[i]);
    if (is_digit_byte(c) && i + 1 < t.size() && t[i + 1] == '-') {
      s += t[i];
      s += ' ';
      s += '-';
      s += ' ';
      i += 2;
    } else {
      s += t[i];
      i += 1;
    }
  }

  // pass 5: collapse whitespace runs, strip
  t.clear();
  t.reserve(s.size());
  bool in_space = false;
  for (unsigned char c : s) {
    if (is_space_byte(c)) {
      in_space = true;
      continue;
    }
    if (in_space && !t.empty()) t += ' ';
    in_space = false;
    t += static_cast<char>(c);
  }
  return t;
}

std::vector<std::string> tokenize_13a_split(const std::string& line) {
  return split_tokens(tokenize_13a(line));
}

}  // namespace ne
