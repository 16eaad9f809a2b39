#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "prax/regex.hpp"

namespace prax {

struct ScoredProgram {
  RegexProgram program;
  double log_score = 0.0;
};

struct ScoredExample {
  Example example;
  double log_score = 0.0;
};

/// One (program, specification) training or evaluation pair.
struct DatasetEntry {
  RegexProgram program;
  Specification spec;
  std::string source = "literal";
  std::optional<int> round;

  friend bool operator==(const DatasetEntry& a, const DatasetEntry& b) {
    return a.program.text() == b.program.text() && a.spec == b.spec && a.source == b.source && a.round == b.round;
  }
};

using Dataset = std::vector<DatasetEntry>;

class DegenerateData : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline void require_consistent(const Dataset& data) {
  if (data.empty()) throw DegenerateData("training data is empty");
  for (const auto& d : data)
    if (!is_consistent(d.program, d.spec)) throw DegenerateData("inconsistent pair for " + d.program.text());
}

namespace models {

inline double log_sum_exp(std::span<const double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

/// Dense weight layout built from named blocks of binary features.
class FeatureLayout {
 public:
  struct Block {
    std::string name;
    std::vector<int> dims;
    std::vector<std::vector<std::string>> labels;
    int base = 0;
    bool conditional = false;
  };

  int add(std::string name, std::vector<std::vector<std::string>> labels, bool conditional) {
    Block b;
    b.name = std::move(name);
    b.base = size_;
    b.conditional = conditional;
    int n = 1;
    for (const auto& l : labels) {
      b.dims.push_back(static_cast<int>(l.size()));
      n *= static_cast<int>(l.size());
    }
    b.labels = std::move(labels);
    size_ += n;
    blocks_.push_back(std::move(b));
    return static_cast<int>(blocks_.size()) - 1;
  }

  int index(int block, std::initializer_list<int> coords) const {
    const Block& b = blocks_[static_cast<std::size_t>(block)];
    int k = 0, d = 0;
    for (int c : coords) k = k * b.dims[static_cast<std::size_t>(d++)] + c;
    return b.base + k;
  }

  int size() const noexcept { return size_; }
  const std::vector<Block>& blocks() const noexcept { return blocks_; }

  /// Name of every weight, in index order.
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(size_));
    for (const auto& b : blocks_) {
      std::vector<int> idx(b.dims.size(), 0);
      int n = 1;
      for (int x : b.dims) n *= x;
      for (int k = 0; k < n; ++k) {
        std::string s = b.name;
        for (std::size_t i = 0; i < idx.size(); ++i) s += "/" + b.labels[i][static_cast<std::size_t>(idx[i])];
        out.push_back(std::move(s));
        for (std::size_t i = idx.size(); i-- > 0;) {
          if (++idx[i] < b.dims[i]) break;
          idx[i] = 0;
        }
      }
    }
    return out;
  }

  std::vector<bool> conditional_mask() const {
    std::vector<bool> out(static_cast<std::size_t>(size_), false);
    for (const auto& b : blocks_) {
      int n = 1;
      for (int x : b.dims) n *= x;
      for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(b.base + k)] = b.conditional;
    }
    return out;
  }

 private:
  std::vector<Block> blocks_;
  int size_ = 0;
};

inline std::vector<std::string> range_labels(int lo, int hi, const std::string& prefix = "") {
  std::vector<std::string> out;
  for (int i = lo; i <= hi; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

/// Active binary features of one option.
using FeatureList = std::vector<int>;

inline double dot(const std::vector<double>& w, const FeatureList& f) {
  double s = 0.0;
  for (int i : f) s += w[static_cast<std::size_t>(i)];
  return s;
}

/// A locally normalized decision: scores are softmaxed over the options.
struct Choice {
  std::vector<FeatureList> options;
  int chosen = -1;  // -1: the observed choice lies outside the option set
};

/// Log-probability assigned to a choice that the grammar cannot produce.
inline constexpr double kOutOfGrammarLogProb = -30.0;

inline double choice_log_prob(const std::vector<double>& w, const Choice& c) {
  if (c.chosen < 0) return kOutOfGrammarLogProb;
  std::vector<double> s(c.options.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = dot(w, c.options[i]);
  return s[static_cast<std::size_t>(c.chosen)] - log_sum_exp(s);
}

/// Adds scale * (f(chosen) - E[f]) to grad.
inline void accumulate_gradient(const std::vector<double>& w, const Choice& c, double scale, std::vector<double>& grad) {
  if (c.chosen < 0) return;
  std::vector<double> s(c.options.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = dot(w, c.options[i]);
  const double z = log_sum_exp(s);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double p = std::exp(s[i] - z);
    for (int f : c.options[i]) grad[static_cast<std::size_t>(f)] -= scale * p;
  }
  for (int f : c.options[static_cast<std::size_t>(c.chosen)]) grad[static_cast<std::size_t>(f)] += scale;
}

inline int bucket(int x, std::initializer_list<int> upper_bounds) {
  int b = 0;
  for (int u : upper_bounds) {
    if (x <= u) return b;
    ++b;
  }
  return b;
}

}  // namespace models
}  // namespace prax
