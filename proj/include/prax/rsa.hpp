#pragma once

#include <bit>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "prax/log.hpp"
#include "prax/models.hpp"
#include "prax/rng.hpp"

namespace prax {

class NoConsistentExample : public std::runtime_error {
 public:
  explicit NoConsistentExample(const std::string& program)
      : std::runtime_error("no candidate example is consistent with " + program) {}
};

struct RsaConfig {
  int n_per_model = 250;
  int n_examples_max = 10;
  bool include_base_models = true;

  void validate() const {
    if (n_per_model < 1) throw std::invalid_argument("rsa.n_per_model must be >= 1");
    if (n_examples_max < 1) throw std::invalid_argument("rsa.n_examples_max must be >= 1");
  }
};

using RealMatrix = std::vector<std::vector<double>>;

struct L0 {
  RealMatrix values;               // one row per kept example
  std::vector<std::size_t> rows;   // original index of each kept row
  std::vector<std::size_t> dropped;
};

struct S1 {
  RealMatrix values;
  std::vector<bool> zero_column;
};

/// Row normalization over consistent programs; all-zero rows are dropped.
inline L0 l0_from_rows(const std::vector<std::vector<int>>& bits) {
  L0 out;
  for (std::size_t e = 0; e < bits.size(); ++e) {
    int n = 0;
    for (int b : bits[e]) n += b != 0;
    if (n == 0) {
      out.dropped.push_back(e);
      continue;
    }
    std::vector<double> row(bits[e].size(), 0.0);
    for (std::size_t p = 0; p < row.size(); ++p)
      if (bits[e][p]) row[p] = 1.0 / n;
    out.values.push_back(std::move(row));
    out.rows.push_back(e);
  }
  if (!out.dropped.empty()) log(LogLevel::Debug, "l0: dropped " + std::to_string(out.dropped.size()) + " all-zero rows");
  return out;
}

inline L0 l0_from_matrix(const ConsistencyMatrix& m) { return l0_from_rows(m.to_rows()); }

/// Column normalization; columns without mass stay zero and are flagged.
inline S1 s1_from_l0(const RealMatrix& l0) {
  S1 out;
  out.values = l0;
  const std::size_t cols = l0.empty() ? 0 : l0.front().size();
  out.zero_column.assign(cols, false);
  for (std::size_t p = 0; p < cols; ++p) {
    double total = 0.0;
    for (const auto& row : l0) total += row[p];
    if (!(total > 0.0)) {
      out.zero_column[p] = true;
      continue;
    }
    for (auto& row : out.values) row[p] /= total;
  }
  return out;
}

/// Pragmatic listener with a uniform program prior: rows of S1 renormalized.
inline RealMatrix l1_from_s1(const RealMatrix& s1) {
  RealMatrix out = s1;
  for (auto& row : out) {
    double total = 0.0;
    for (double x : row) total += x;
    if (total > 0.0)
      for (auto& x : row) x /= total;
  }
  return out;
}

namespace detail {

/// Tie order among equal S1 values: higher speaker score, shorter string,
/// then (string, label).
inline bool tie_preferred(const Example& a, double score_a, const Example& b, double score_b) {
  if (score_a != score_b) return score_a > score_b;
  if (a.text.size() != b.text.size()) return a.text.size() < b.text.size();
  return a < b;
}

}  // namespace detail

/// Argmax of S1 in the target's column.  tie_scores, when given, holds the
/// current speaker's score of every row.
inline Example select_informative_example(const ConsistencyMatrix& m, const RegexProgram& target, const RsaConfig& cfg = {},
                                          const std::vector<double>& tie_scores = {}) {
  (void)cfg;
  const auto& programs = m.programs();
  const auto it = std::find(programs.begin(), programs.end(), target);
  if (it == programs.end()) throw std::invalid_argument("target is not a column of the matrix");
  const auto t = static_cast<std::size_t>(it - programs.begin());
  const L0 l0 = l0_from_matrix(m);
  const S1 s1 = s1_from_l0(l0.values);
  if (s1.zero_column.empty() || s1.zero_column[t]) throw NoConsistentExample(target.text());
  std::optional<std::size_t> best;
  auto score = [&](std::size_t row) { return tie_scores.empty() ? 0.0 : tie_scores[l0.rows[row]]; };
  for (std::size_t r = 0; r < s1.values.size(); ++r) {
    const double v = s1.values[r][t];
    if (!(v > 0.0)) continue;
    if (!best) {
      best = r;
      continue;
    }
    const double bv = s1.values[*best][t];
    if (v > bv || (v == bv && detail::tie_preferred(m.examples()[l0.rows[r]], score(r), m.examples()[l0.rows[*best]], score(*best))))
      best = r;
  }
  const Example chosen = m.examples()[l0.rows[*best]];
  if (!is_consistent(target, chosen)) throw std::logic_error("selected example is inconsistent with the target");
  return chosen;
}

/// Candidate pools for one step of pragmatic generation.
struct RsaPools {
  std::function<std::vector<Example>(const RegexProgram& target, const Specification& partial, Rng&)> examples;
  std::function<std::vector<RegexProgram>(const Specification& partial, Rng&)> programs;
  /// Current speaker's score, used only to break S1 ties.
  std::function<double(const Example&, const Specification& partial)> tie_score;
};

namespace detail {

inline bool consistent_or_false(const RegexProgram& p, const Specification& spec) {
  try {
    return is_consistent(p, spec);
  } catch (const std::length_error&) {
    return false;  // DFA too large to compile
  }
}

}  // namespace detail

/// Incremental pragmatic specification (one S1 argmax per step).
inline Specification generate_pragmatic_spec(const RegexProgram& target, const RsaPools& pools, const RsaConfig& cfg, Rng& rng) {
  cfg.validate();
  Specification spec;
  for (int i = 0; i < cfg.n_examples_max; ++i) {
    std::vector<Example> examples;
    std::set<std::string> seen;
    for (auto& e : pools.examples(target, spec, rng))
      if (!spec.contains_text(e.text) && is_consistent(target, e) && seen.insert(e.text).second) examples.push_back(std::move(e));
    if (examples.empty()) {
      log(LogLevel::Info, "rsa: no new example for " + target.text() + " after " + std::to_string(spec.size()));
      break;
    }
    std::vector<RegexProgram> programs{target};
    std::unordered_set<std::string> names{target.text()};
    for (auto& p : pools.programs(spec, rng))
      if (!names.count(p.text()) && detail::consistent_or_false(p, spec)) {
        names.insert(p.text());
        programs.push_back(std::move(p));
      }
    std::vector<double> ties;
    if (pools.tie_score)
      for (const auto& e : examples) ties.push_back(pools.tie_score(e, spec));
    const ConsistencyMatrix m(std::move(programs), std::move(examples));
    spec.push_back(select_informative_example(m, target, cfg, ties));
  }
  return spec;
}

/// Pools drawn from speaker and listener snapshots; the last snapshot of
/// each list is the current one, earlier ones are used when
/// cfg.include_base_models is set.
inline RsaPools snapshot_pools(const std::vector<ListenerSnapshot>& listeners, const std::vector<SpeakerSnapshot>& speakers,
                               const RsaConfig& cfg) {
  if (listeners.empty() || speakers.empty()) throw std::invalid_argument("rsa needs at least one listener and one speaker");
  auto pick = [&](const auto& v) {
    std::decay_t<decltype(v)> out;
    if (cfg.include_base_models) out = v;
    else out.push_back(v.back());
    return out;
  };
  RsaPools pools;
  pools.examples = [speakers = pick(speakers), n = cfg.n_per_model](const RegexProgram& target, const Specification& partial,
                                                                     Rng& rng) {
    std::vector<Example> out;
    for (const auto& s : speakers)
      for (auto& se : speaker_propose(s, target, partial, n, rng)) out.push_back(std::move(se.example));
    return out;
  };
  pools.programs = [listeners = pick(listeners), n = cfg.n_per_model](const Specification& partial, Rng& rng) {
    std::vector<RegexProgram> out;
    for (const auto& l : listeners)
      for (auto& sp : listener_propose(l, partial, n, rng)) out.push_back(std::move(sp.program));
    return out;
  };
  return pools;
}

inline Specification generate_pragmatic_spec(const RegexProgram& target, const std::vector<ListenerSnapshot>& listeners,
                                             const std::vector<SpeakerSnapshot>& speakers, const RsaConfig& cfg, Rng& rng) {
  RsaPools pools = snapshot_pools(listeners, speakers, cfg);
  pools.tie_score = [current = speakers.back(), target](const Example& e, const Specification& partial) {
    return speaker_score(current, e, target, partial);
  };
  return generate_pragmatic_spec(target, pools, cfg, rng);
}

/// Exact RSA over a fixed universe, with the consistency matrix stored as
/// bitsets.  Conditioning on a partial spec restricts the columns.
class ExactRsa {
 public:
  ExactRsa(std::vector<RegexProgram> programs, std::vector<Example> examples)
      : programs_(std::move(programs)), examples_(std::move(examples)), words_((programs_.size() + 63) / 64) {
    bits_.assign(examples_.size() * words_, 0);
    for (std::size_t p = 0; p < programs_.size(); ++p) {
      index_.emplace(programs_[p].text(), p);
      const auto& dfa = programs_[p].dfa();
      for (std::size_t e = 0; e < examples_.size(); ++e)
        if (dfa.matches(examples_[e].text) == examples_[e].label) bits_[e * words_ + p / 64] |= std::uint64_t{1} << (p % 64);
    }
  }

  const std::vector<RegexProgram>& programs() const noexcept { return programs_; }
  const std::vector<Example>& examples() const noexcept { return examples_; }

  /// Greedy pragmatic spec of up to n examples.  A target outside the
  /// universe is added as one more column.
  Specification spec_for(const RegexProgram& target, int n) const {
    return run(target, n, nullptr);
  }

  /// Next exact-RSA example after an arbitrary partial spec, or nothing
  /// when every target-consistent example has been used.
  std::optional<Example> next_example(const RegexProgram& target, const Specification& partial) const {
    const auto found = index_.find(target.text());
    const bool extra = found == index_.end();
    std::vector<char> target_ok(examples_.size()), used(examples_.size());
    for (std::size_t e = 0; e < examples_.size(); ++e) {
      target_ok[e] = is_consistent(target, examples_[e]);
      used[e] = partial.contains_text(examples_[e].text);
    }
    std::vector<std::uint64_t> alive(words_, 0);
    for (std::size_t p = 0; p < programs_.size(); ++p)
      if (is_consistent(programs_[p], partial)) alive[p / 64] |= std::uint64_t{1} << (p % 64);
    const auto best = pick(target_ok, used, alive, extra);
    if (!best) return std::nullopt;
    return examples_[*best];
  }

  /// Universe programs consistent with each successive prefix of the result.
  std::vector<std::size_t> alive_counts(const RegexProgram& target, int n) const {
    std::vector<std::size_t> counts;
    run(target, n, &counts);
    return counts;
  }

 private:
  Specification run(const RegexProgram& target, int n, std::vector<std::size_t>* counts) const {
    const auto found = index_.find(target.text());
    const bool extra = found == index_.end();
    std::vector<char> target_ok(examples_.size());
    for (std::size_t e = 0; e < examples_.size(); ++e)
      target_ok[e] = extra ? is_consistent(target, examples_[e]) : bit(e, found->second);
    std::vector<std::uint64_t> alive(words_, ~std::uint64_t{0});
    if (programs_.size() % 64) alive.back() = (std::uint64_t{1} << (programs_.size() % 64)) - 1;
    std::vector<char> used(examples_.size(), 0);
    Specification spec;
    auto alive_count = [&] {
      std::size_t k = 0;
      for (auto w : alive) k += static_cast<std::size_t>(std::popcount(w));
      return k;
    };
    if (counts) counts->push_back(alive_count());
    for (int i = 0; i < n; ++i) {
      const auto best = pick(target_ok, used, alive, extra);
      if (!best) break;
      // an example sharing a used text would contradict or duplicate
      for (std::size_t e = 0; e < examples_.size(); ++e)
        if (examples_[e].text == examples_[*best].text) used[e] = 1;
      spec.push_back(examples_[*best]);
      const std::uint64_t* row = &bits_[*best * words_];
      for (std::size_t w = 0; w < words_; ++w) alive[w] &= row[w];
      if (counts) counts->push_back(alive_count());
    }
    return spec;
  }

  // L0[e][target] = 1/|consistent columns|; S1 keeps its argmax.
  std::optional<std::size_t> pick(const std::vector<char>& target_ok, const std::vector<char>& used,
                                  const std::vector<std::uint64_t>& alive, bool extra) const {
    std::optional<std::size_t> best;
    double best_v = 0.0;
    for (std::size_t e = 0; e < examples_.size(); ++e) {
      if (!target_ok[e] || used[e]) continue;
      std::size_t k = extra ? 1 : 0;
      const std::uint64_t* row = &bits_[e * words_];
      for (std::size_t w = 0; w < words_; ++w) k += static_cast<std::size_t>(std::popcount(row[w] & alive[w]));
      const double v = 1.0 / static_cast<double>(k);
      if (!best || v > best_v || (v == best_v && detail::tie_preferred(examples_[e], 0.0, examples_[*best], 0.0))) {
        best = e;
        best_v = v;
      }
    }
    return best;
  }

  bool bit(std::size_t e, std::size_t p) const { return (bits_[e * words_ + p / 64] >> (p % 64)) & 1U; }

  std::vector<RegexProgram> programs_;
  std::vector<Example> examples_;
  std::size_t words_;
  std::vector<std::uint64_t> bits_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline Specification exact_rsa_spec(const RegexProgram& target, const std::vector<RegexProgram>& all_programs,
                                    const std::vector<Example>& all_examples, int n) {
  return ExactRsa(all_programs, all_examples).spec_for(target, n);
}

}  // namespace prax
