#pragma once

#include <algorithm>
#include <string>
#include <unordered_set>
#include <vector>

#include "prax/regex.hpp"

namespace prax {

/// Small closed program/example universes used for exact inference.
struct EnumerationConfig {
  std::string literals = "ab";
  std::string quantifiers = "*+?";      // subset of "*+?"
  std::vector<std::pair<int, int>> repeats;  // extra {lo,hi} quantifiers
  int max_tokens = 5;
};

/// Every canonical program with at most max_tokens tokens, ordered by
/// (token count, text).  Each tree appears once.
inline std::vector<RegexProgram> enumerate_programs(const EnumerationConfig& cfg) {
  std::vector<std::string> symbols;
  for (char c : cfg.literals) symbols.push_back(std::string(regex::is_meta(c) ? "\\" : "") + c);
  for (char q : cfg.quantifiers) symbols.emplace_back(1, q);
  for (auto [lo, hi] : cfg.repeats)
    symbols.push_back(lo == hi ? "{" + std::to_string(lo) + "}" : "{" + std::to_string(lo) + "," + std::to_string(hi) + "}");
  symbols.emplace_back("|");
  symbols.emplace_back("(");
  symbols.emplace_back(")");

  std::vector<RegexProgram> out;
  std::vector<std::size_t> idx;
  std::string text;
  for (int len = 1; len <= cfg.max_tokens; ++len) {
    std::vector<RegexProgram> level;
    idx.assign(static_cast<std::size_t>(len), 0);
    for (;;) {
      text.clear();
      for (std::size_t i : idx) text += symbols[i];
      try {
        RegexProgram p = RegexProgram::parse(text);
        if (p.text() == text) level.push_back(std::move(p));
      } catch (const regex::RegexError&) {
      }
      std::size_t k = 0;
      while (k < idx.size() && ++idx[k] == symbols.size()) idx[k++] = 0;
      if (k == idx.size()) break;
    }
    std::sort(level.begin(), level.end());
    for (auto& p : level) out.push_back(std::move(p));
  }
  return out;
}

/// Keeps the first program of each language (by minimal DFA).
inline std::vector<RegexProgram> dedupe_languages(const std::vector<RegexProgram>& programs) {
  std::unordered_set<std::string> seen;
  std::vector<RegexProgram> out;
  for (const auto& p : programs)
    if (seen.insert(p.dfa().key()).second) out.push_back(p);
  return out;
}

/// All strings over alphabet up to max_len, shortest first then lexicographic.
inline std::vector<std::string> enumerate_strings(const std::string& alphabet, int max_len) {
  std::vector<std::string> out{""};
  std::size_t begin = 0;
  std::string sorted = alphabet;
  std::sort(sorted.begin(), sorted.end());
  for (int len = 1; len <= max_len; ++len) {
    const std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i)
      for (char c : sorted) out.push_back(out[i] + c);
    begin = end;
  }
  return out;
}

/// Every labelled string over alphabet up to max_len.
inline std::vector<Example> enumerate_examples(const std::string& alphabet, int max_len) {
  std::vector<Example> out;
  for (auto& s : enumerate_strings(alphabet, max_len)) {
    out.push_back({s, true});
    out.push_back({s, false});
  }
  return out;
}

}  // namespace prax
