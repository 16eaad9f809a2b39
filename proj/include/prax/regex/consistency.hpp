#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

#include "prax/regex/example.hpp"
#include "prax/regex/program.hpp"

namespace prax {

using regex::RegexProgram;
using regex::semantically_equal;

inline bool is_consistent(const RegexProgram& program, const Example& example) {
  return program.matches(example.text) == example.label;
}

inline bool is_consistent(const RegexProgram& program, const Specification& spec) {
  return std::all_of(spec.begin(), spec.end(), [&](const Example& e) { return is_consistent(program, e); });
}

/// Levenshtein distance over token sequences, unit costs.
inline std::size_t token_edit_distance(const RegexProgram& a, const RegexProgram& b) {
  const auto& x = a.tokens();
  const auto& y = b.tokens();
  std::vector<std::size_t> row(y.size() + 1);
  for (std::size_t j = 0; j <= y.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= x.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= y.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (x[i - 1] == y[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[y.size()];
}

/// Binary examples x programs matrix; rows are examples, columns programs.
class ConsistencyMatrix {
 public:
  ConsistencyMatrix() = default;

  /// Lists must be non-empty and free of duplicates.
  ConsistencyMatrix(std::vector<RegexProgram> programs, std::vector<Example> examples)
      : programs_(std::move(programs)), examples_(std::move(examples)) {
    if (programs_.empty() || examples_.empty()) throw std::invalid_argument("consistency matrix needs programs and examples");
    const auto names = texts();
    if (std::set<std::string>(names.begin(), names.end()).size() != programs_.size())
      throw std::invalid_argument("duplicate program in consistency matrix");
    if (std::set<Example>(examples_.begin(), examples_.end()).size() != examples_.size())
      throw std::invalid_argument("duplicate example in consistency matrix");
    bits_.resize(examples_.size() * programs_.size());
    for (std::size_t p = 0; p < programs_.size(); ++p) {
      const auto& dfa = programs_[p].dfa();
      for (std::size_t e = 0; e < examples_.size(); ++e)
        bits_[e * programs_.size() + p] = dfa.matches(examples_[e].text) == examples_[e].label;
    }
  }

  std::size_t rows() const noexcept { return examples_.size(); }
  std::size_t cols() const noexcept { return programs_.size(); }
  bool operator()(std::size_t e, std::size_t p) const { return bits_[e * programs_.size() + p] != 0; }

  const std::vector<RegexProgram>& programs() const noexcept { return programs_; }
  const std::vector<Example>& examples() const noexcept { return examples_; }

  std::vector<std::vector<int>> to_rows() const {
    std::vector<std::vector<int>> out(rows(), std::vector<int>(cols()));
    for (std::size_t e = 0; e < rows(); ++e)
      for (std::size_t p = 0; p < cols(); ++p) out[e][p] = (*this)(e, p) ? 1 : 0;
    return out;
  }

 private:
  std::vector<std::string> texts() const {
    std::vector<std::string> t;
    for (const auto& p : programs_) t.push_back(p.text());
    return t;
  }

  std::vector<RegexProgram> programs_;
  std::vector<Example> examples_;
  std::vector<std::uint8_t> bits_;
};

inline ConsistencyMatrix consistency_matrix(std::vector<RegexProgram> programs, std::vector<Example> examples) {
  return ConsistencyMatrix(std::move(programs), std::move(examples));
}

}  // namespace prax
