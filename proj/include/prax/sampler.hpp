#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "prax/regex.hpp"
#include "prax/rng.hpp"

namespace prax {

using regex::CharClass;
using regex::Node;
using regex::NodeKind;

class EmptyLanguage : public std::runtime_error {
 public:
  explicit EmptyLanguage(const std::string& program)
      : std::runtime_error("no accepted string within length bound for " + program) {}
};

class UniversalLanguage : public std::runtime_error {
 public:
  explicit UniversalLanguage(const std::string& program)
      : std::runtime_error("every string within length bound matches " + program) {}
};

inline std::string printable_ascii() {
  std::string s;
  for (char c = regex::kFirstChar; c <= regex::kLastChar; ++c) s.push_back(c);
  return s;
}

/// Strings examples are drawn from.
struct ExampleSpace {
  std::string alphabet = printable_ascii();
  int max_length = 15;
};

enum class Template { Concatenation, Separation };

struct SamplerConfig {
  int max_tokens = 30;
  int max_concat_depth = 3;
  double concat_weight = 5.0;
  double separation_weight = 1.0;
  std::uint64_t rng_seed = 0;
  std::string literals = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  std::vector<CharClass> classes{regex::kAllClasses.begin(), regex::kAllClasses.end()};
  std::string delimiters = "-.,";
  int max_repeat = regex::kMaxRepeat;

  void validate() const {
    if (max_tokens < 1) throw std::invalid_argument("sampler.max_tokens must be >= 1");
    if (max_concat_depth < 1) throw std::invalid_argument("sampler.max_concat_depth must be >= 1");
    if (!(concat_weight > 0) || separation_weight < 0) throw std::invalid_argument("sampler template weights must be positive");
    if (literals.empty() && classes.empty()) throw std::invalid_argument("sampler needs literals or classes");
    if (max_repeat < 1 || max_repeat > regex::kMaxRepeat) throw std::invalid_argument("sampler.max_repeat out of range");
  }
};

struct SampledProgram {
  RegexProgram program;
  Template kind = Template::Concatenation;
  int fragments = 0;  // concatenated fragments, or separated fields
};

namespace detail {

inline Node sample_atom(const SamplerConfig& cfg, Rng& rng) {
  if (!cfg.classes.empty() && (cfg.literals.empty() || rng.bernoulli(0.35)))
    return Node::char_class(cfg.classes[rng.below(cfg.classes.size())]);
  return Node::literal(cfg.literals[rng.below(cfg.literals.size())]);
}

inline Node sample_literal_run(const SamplerConfig& cfg, Rng& rng) {
  if (cfg.literals.empty()) return sample_atom(cfg, rng);
  std::vector<Node> chars;
  const int k = rng.uniform_int(2, 3);
  for (int i = 0; i < k; ++i) chars.push_back(Node::literal(cfg.literals[rng.below(cfg.literals.size())]));
  return Node::nary(NodeKind::Concat, std::move(chars));
}

inline Node quantify(Node base, const SamplerConfig& cfg, Rng& rng) {
  const double u = rng.uniform();
  if (u < 0.35) return base;
  if (u < 0.50) return Node::unary(NodeKind::Star, std::move(base));
  if (u < 0.70) return Node::unary(NodeKind::Plus, std::move(base));
  if (u < 0.80) return Node::unary(NodeKind::Opt, std::move(base));
  if (cfg.max_repeat < 2) return Node::unary(NodeKind::Plus, std::move(base));
  if (u < 0.90) {
    const int n = rng.uniform_int(2, cfg.max_repeat);
    return Node::repeat(std::move(base), n, n);
  }
  const int lo = rng.uniform_int(1, cfg.max_repeat - 1);
  const int hi = rng.uniform_int(lo + 1, cfg.max_repeat);
  return Node::repeat(std::move(base), lo, hi);
}

inline Node sample_fragment(const SamplerConfig& cfg, Rng& rng) {
  const double u = rng.uniform();
  Node base;
  if (u < 0.65) {
    base = sample_atom(cfg, rng);
  } else if (u < 0.82) {
    base = sample_literal_run(cfg, rng);
  } else {
    std::vector<Node> options;
    const int k = rng.uniform_int(2, 3);
    for (int i = 0; i < k; ++i) options.push_back(rng.bernoulli(0.75) ? sample_atom(cfg, rng) : sample_literal_run(cfg, rng));
    base = Node::nary(NodeKind::Alt, std::move(options));
  }
  return quantify(std::move(base), cfg, rng);
}

/// Fits an over-long tree under the token budget by dropping parts.
inline Node shrink(Node n, int max_tokens, const SamplerConfig& cfg, Rng& rng) {
  auto size = [](const Node& x) { return static_cast<int>(regex::tokens_of(regex::render(x)).size()); };
  while (size(n) > max_tokens) {
    if (n.kind == NodeKind::Concat || n.kind == NodeKind::Alt) {
      n.children.pop_back();
      n = Node::nary(n.kind, std::move(n.children));
    } else if (regex::is_quantifier(n.kind)) {
      n = Node(n.child());
    } else {
      return sample_atom(cfg, rng);
    }
  }
  return n;
}

}  // namespace detail

/// Draws a program from the concatenation or separation template.
inline SampledProgram sample_program_detailed(const SamplerConfig& cfg, Rng& rng) {
  cfg.validate();
  const bool can_separate = !cfg.delimiters.empty() && cfg.separation_weight > 0;
  Node last;
  SampledProgram out;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double total = cfg.concat_weight + (can_separate ? cfg.separation_weight : 0.0);
    const bool separation = can_separate && rng.uniform() * total >= cfg.concat_weight;
    std::vector<Node> parts;
    int fragments = 0;
    if (separation) {
      const char delim = cfg.delimiters[rng.below(cfg.delimiters.size())];
      fragments = rng.uniform_int(2, std::max(2, std::min(3, cfg.max_concat_depth)));
      for (int i = 0; i < fragments; ++i) {
        if (i) parts.push_back(Node::literal(delim));
        parts.push_back(detail::sample_fragment(cfg, rng));
      }
    } else {
      fragments = rng.uniform_int(1, cfg.max_concat_depth);
      for (int i = 0; i < fragments; ++i) parts.push_back(detail::sample_fragment(cfg, rng));
    }
    last = Node::nary(NodeKind::Concat, std::move(parts));
    RegexProgram p(last);
    out.kind = separation ? Template::Separation : Template::Concatenation;
    out.fragments = fragments;
    if (static_cast<int>(p.size()) <= cfg.max_tokens) {
      out.program = std::move(p);
      return out;
    }
  }
  out.program = RegexProgram(detail::shrink(std::move(last), cfg.max_tokens, cfg, rng));
  return out;
}

inline RegexProgram sample_program(const SamplerConfig& cfg, Rng& rng) { return sample_program_detailed(cfg, rng).program; }

/// Uniform-length, then uniform-string sampling of accepted strings, by
/// counting DFA paths restricted to an alphabet.
class PathSampler {
 public:
  PathSampler(const RegexProgram& program, const ExampleSpace& space) : dfa_(&program.dfa()), max_len_(space.max_length) {
    for (char c : space.alphabet)
      if (regex::in_alphabet(c) && std::find(alphabet_.begin(), alphabet_.end(), c) == alphabet_.end()) alphabet_.push_back(c);
    const auto n = static_cast<std::size_t>(dfa_->num_states());
    counts_.assign(static_cast<std::size_t>(std::max(0, max_len_)) + 1, std::vector<double>(n, 0.0));
    for (std::size_t s = 0; s < n; ++s) counts_[0][s] = dfa_->accepting(static_cast<int>(s)) ? 1.0 : 0.0;
    for (std::size_t len = 1; len < counts_.size(); ++len)
      for (std::size_t s = 0; s < n; ++s) {
        double total = 0.0;
        for (char c : alphabet_) total += counts_[len - 1][static_cast<std::size_t>(dfa_->step(static_cast<int>(s), c))];
        counts_[len][s] = total;
      }
    for (std::size_t len = 0; len < counts_.size(); ++len)
      if (counts_[len][0] > 0) lengths_.push_back(static_cast<int>(len));
  }

  bool empty() const noexcept { return lengths_.empty(); }
  const std::vector<int>& feasible_lengths() const noexcept { return lengths_; }

  std::string draw(Rng& rng) const {
    if (lengths_.empty()) return {};
    return draw_length(lengths_[rng.below(lengths_.size())], rng);
  }

  std::string draw_length(int len, Rng& rng) const {
    std::string out;
    int s = 0;
    std::vector<double> w(alphabet_.size());
    for (int r = len; r > 0; --r) {
      for (std::size_t i = 0; i < alphabet_.size(); ++i)
        w[i] = counts_[static_cast<std::size_t>(r - 1)][static_cast<std::size_t>(dfa_->step(s, alphabet_[i]))];
      const std::size_t k = rng.categorical(w);
      if (k >= alphabet_.size()) break;
      out.push_back(alphabet_[k]);
      s = dfa_->step(s, alphabet_[k]);
    }
    return out;
  }

 private:
  const regex::Dfa* dfa_;
  int max_len_;
  std::string alphabet_;
  std::vector<std::vector<double>> counts_;
  std::vector<int> lengths_;
};

/// True when every string over the space's alphabet up to its length bound matches.
inline bool accepts_everything(const RegexProgram& program, const ExampleSpace& space) {
  const auto& dfa = program.dfa();
  std::vector<char> seen(static_cast<std::size_t>(dfa.num_states()), 0);
  std::vector<int> frontier{0};
  seen[0] = 1;
  for (int depth = 0;; ++depth) {
    for (int s : frontier)
      if (!dfa.accepting(s)) return false;
    if (depth == space.max_length) return true;
    std::vector<int> next;
    for (int s : frontier)
      for (char c : space.alphabet) {
        const int t = dfa.step(s, c);
        if (t >= 0 && !seen[static_cast<std::size_t>(t)]) {
          seen[static_cast<std::size_t>(t)] = 1;
          next.push_back(t);
        }
      }
    if (next.empty()) return true;
    frontier.swap(next);
  }
}

inline std::string sample_positive_string(const RegexProgram& program, Rng& rng, const ExampleSpace& space) {
  PathSampler ps(program, space);
  if (ps.empty()) throw EmptyLanguage(program.text());
  return ps.draw(rng);
}

inline std::string sample_positive_string(const RegexProgram& program, Rng& rng, int max_len) {
  return sample_positive_string(program, rng, ExampleSpace{printable_ascii(), max_len});
}

namespace detail {

inline std::string uniform_string(const ExampleSpace& space, Rng& rng) {
  int len = 0;
  while (len < space.max_length && !rng.bernoulli(0.2)) ++len;
  std::string s;
  for (int i = 0; i < len; ++i) s.push_back(space.alphabet[rng.below(space.alphabet.size())]);
  return s;
}

inline std::string perturb(std::string s, const ExampleSpace& space, Rng& rng) {
  const auto pick_char = [&] { return space.alphabet[rng.below(space.alphabet.size())]; };
  const int op = static_cast<int>(rng.below(3));
  if ((op == 0 && static_cast<int>(s.size()) < space.max_length) || s.empty()) {
    if (static_cast<int>(s.size()) >= space.max_length) return s;
    s.insert(s.begin() + static_cast<std::ptrdiff_t>(rng.below(s.size() + 1)), pick_char());
  } else if (op == 1) {
    s.erase(s.begin() + static_cast<std::ptrdiff_t>(rng.below(s.size())));
  } else {
    s[rng.below(s.size())] = pick_char();
  }
  return s;
}

/// A rejected string drawn along DFA paths into non-accepting states.
inline std::string complement_path(const RegexProgram& program, const ExampleSpace& space, Rng& rng) {
  const auto& dfa = program.dfa();
  const auto n = static_cast<std::size_t>(dfa.num_states());
  std::vector<std::vector<double>> counts(static_cast<std::size_t>(space.max_length) + 1, std::vector<double>(n));
  for (std::size_t s = 0; s < n; ++s) counts[0][s] = dfa.accepting(static_cast<int>(s)) ? 0.0 : 1.0;
  for (std::size_t len = 1; len < counts.size(); ++len)
    for (std::size_t s = 0; s < n; ++s)
      for (char c : space.alphabet) counts[len][s] += counts[len - 1][static_cast<std::size_t>(dfa.step(static_cast<int>(s), c))];
  std::vector<int> lengths;
  for (std::size_t len = 0; len < counts.size(); ++len)
    if (counts[len][0] > 0) lengths.push_back(static_cast<int>(len));
  if (lengths.empty()) throw UniversalLanguage(program.text());
  const int len = lengths[rng.below(lengths.size())];
  std::string out;
  int s = 0;
  std::vector<double> w(space.alphabet.size());
  for (int r = len; r > 0; --r) {
    for (std::size_t i = 0; i < space.alphabet.size(); ++i)
      w[i] = counts[static_cast<std::size_t>(r - 1)][static_cast<std::size_t>(dfa.step(s, space.alphabet[i]))];
    const std::size_t k = rng.categorical(w);
    out.push_back(space.alphabet[k]);
    s = dfa.step(s, space.alphabet[k]);
  }
  return out;
}

}  // namespace detail

/// Rejection-sampled non-matching strings: uniform strings with geometric
/// length, or single-edit perturbations of a positive string.
class NegativeSampler {
 public:
  NegativeSampler(const RegexProgram& program, const ExampleSpace& space)
      : program_(program), space_(space), positives_(program, space) {
    feasible_ = !space.alphabet.empty() && !accepts_everything(program, space);
  }

  bool empty() const noexcept { return !feasible_; }

  std::string draw(Rng& rng) const {
    if (!feasible_) throw UniversalLanguage(program_.text());
    for (int attempt = 0; attempt < 1000; ++attempt) {
      std::string s = (!positives_.empty() && rng.bernoulli(0.5)) ? detail::perturb(positives_.draw(rng), space_, rng)
                                                                  : detail::uniform_string(space_, rng);
      if (!program_.matches(s)) return s;
    }
    return detail::complement_path(program_, space_, rng);
  }

 private:
  RegexProgram program_;
  ExampleSpace space_;
  PathSampler positives_;
  bool feasible_ = false;
};

inline std::string sample_negative_string(const RegexProgram& program, Rng& rng, const ExampleSpace& space) {
  return NegativeSampler(program, space).draw(rng);
}

inline std::string sample_negative_string(const RegexProgram& program, Rng& rng, int max_len) {
  return sample_negative_string(program, rng, ExampleSpace{printable_ascii(), max_len});
}

/// n examples, each positive or negative with probability one half, falling
/// back to the feasible polarity.  Fewer are returned only when the example
/// space runs out of distinct strings.
inline Specification sample_random_spec(const RegexProgram& program, int n, Rng& rng, const ExampleSpace& space) {
  Specification spec;
  if (n <= 0) return spec;
  PathSampler ps(program, space);
  NegativeSampler ns(program, space);
  const bool can_pos = !ps.empty();
  const bool can_neg = !ns.empty();
  if (!can_pos && !can_neg) throw EmptyLanguage(program.text());
  auto novel = [&](bool positive) -> std::optional<std::string> {
    for (int attempt = 0; attempt < 50; ++attempt) {
      std::string s = positive ? ps.draw(rng) : ns.draw(rng);
      if (!spec.contains_text(s)) return s;
    }
    return std::nullopt;
  };
  for (int i = 0; i < n; ++i) {
    bool positive = rng.bernoulli(0.5);
    if (positive && !can_pos) positive = false;
    if (!positive && !can_neg) positive = true;
    auto s = novel(positive);
    if (!s && (positive ? can_neg : can_pos)) {
      positive = !positive;
      s = novel(positive);
    }
    if (!s) break;
    spec.push_back({std::move(*s), positive});
  }
  return spec;
}

}  // namespace prax
