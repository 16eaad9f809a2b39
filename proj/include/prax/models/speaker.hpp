#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "prax/models/common.hpp"
#include "prax/models/listener.hpp"
#include "prax/rng.hpp"
#include "prax/sampler.hpp"

namespace prax {

struct SpeakerSettings {
  ExampleSpace space;
  /// Raw candidates drawn per requested example.
  int pool_factor = 4;
  /// Competing candidates per factor when computing likelihoods.
  int contrast_size = 31;

  void validate() const {
    if (space.alphabet.empty()) throw std::invalid_argument("speaker alphabet is empty");
    if (space.max_length < 0) throw std::invalid_argument("speaker max_length must be >= 0");
    if (pool_factor < 1 || contrast_size < 1) throw std::invalid_argument("speaker pool sizes must be >= 1");
  }

  friend bool operator==(const SpeakerSettings& a, const SpeakerSettings& b) {
    return a.space.alphabet == b.space.alphabet && a.space.max_length == b.space.max_length && a.pool_factor == b.pool_factor &&
           a.contrast_size == b.contrast_size;
  }
};

namespace models {

/// Features of an example given the program and the examples before it.
class SpeakerFeatures {
 public:
  SpeakerFeatures() {
    const std::vector<std::string> pol{"neg", "pos"};
    len_ = layout_.add("length", {pol, {"0", "1", "2", "3", "4", "5-6", "7+"}}, false);
    novel_ = layout_.add("novel_chars", {pol}, false);
    cover_ = layout_.add("covers_literals", {pol, {"0", "1", "2+"}}, false);
    minority_ = layout_.add("minority_polarity", {pol}, false);
    edit1_ = layout_.add("edit1", {pol, {"same_label", "other_label"}}, false);
    prefix_ = layout_.add("prefix_related", {pol}, false);
    empty_ = layout_.add("empty", {pol}, false);
    run_ = layout_.add("repeated_run", {pol}, false);
    distinct_ = layout_.add("distinct_chars", {pol, {"0", "1", "2", "3+"}}, false);
    step_ = layout_.add("step", {pol, {"0", "1", "2", "3", "4+"}}, false);
    foreign_ = layout_.add("foreign_chars", {pol}, false);
    shorter_ = layout_.add("shortest_so_far", {pol}, false);
  }

  const FeatureLayout& layout() const noexcept { return layout_; }

  /// Context shared by all candidates of one step.
  struct Context {
    CharSet program_chars, literal_chars, seen_chars, covered_literals;
    std::vector<Example> prior;
    int n_pos = 0, n_neg = 0;
    std::size_t shortest_pos = std::string::npos, shortest_neg = std::string::npos;
  };

  static Context context(const RegexProgram& program, const Specification& partial) {
    Context c;
    c.program_chars = regex::node_chars(program.ast());
    collect_literals(program.ast(), c.literal_chars);
    for (const auto& e : partial) {
      c.seen_chars |= regex::chars_of(e.text);
      c.prior.push_back(e);
      (e.label ? c.n_pos : c.n_neg)++;
      auto& shortest = e.label ? c.shortest_pos : c.shortest_neg;
      shortest = std::min(shortest, e.text.size());
    }
    c.covered_literals = c.seen_chars & c.literal_chars;
    return c;
  }

  FeatureList features(const Example& e, const Context& c) const {
    const int p = e.label ? 1 : 0;
    const CharSet cs = regex::chars_of(e.text);
    const int len = static_cast<int>(e.text.size());
    FeatureList f{layout_.index(len_, {p, bucket(len, {0, 1, 2, 3, 4, 6})})};
    if ((cs & ~c.seen_chars).any()) f.push_back(layout_.index(novel_, {p}));
    const int cover = static_cast<int>((cs & c.literal_chars & ~c.covered_literals).count());
    f.push_back(layout_.index(cover_, {p, std::min(cover, 2)}));
    if ((e.label ? c.n_pos : c.n_neg) < (e.label ? c.n_neg : c.n_pos)) f.push_back(layout_.index(minority_, {p}));
    bool edit_same = false, edit_other = false, prefix = false;
    for (const auto& x : c.prior) {
      if (within_one_edit(x.text, e.text)) (x.label == e.label ? edit_same : edit_other) = true;
      if (x.text.size() != e.text.size() &&
          (e.text.compare(0, x.text.size(), x.text) == 0 || x.text.compare(0, e.text.size(), e.text) == 0))
        prefix = true;
    }
    if (edit_same) f.push_back(layout_.index(edit1_, {p, 0}));
    if (edit_other) f.push_back(layout_.index(edit1_, {p, 1}));
    if (prefix) f.push_back(layout_.index(prefix_, {p}));
    if (e.text.empty()) f.push_back(layout_.index(empty_, {p}));
    for (std::size_t i = 1; i < e.text.size(); ++i)
      if (e.text[i] == e.text[i - 1]) {
        f.push_back(layout_.index(run_, {p}));
        break;
      }
    f.push_back(layout_.index(distinct_, {p, std::min(static_cast<int>(cs.count()), 3)}));
    f.push_back(layout_.index(step_, {p, std::min(static_cast<int>(c.prior.size()), 4)}));
    if ((cs & ~c.program_chars).any()) f.push_back(layout_.index(foreign_, {p}));
    if (e.text.size() < (e.label ? c.shortest_pos : c.shortest_neg)) f.push_back(layout_.index(shorter_, {p}));
    return f;
  }

 private:
  static void collect_literals(const Node& n, CharSet& out) {
    if (n.kind == NodeKind::Literal) out |= regex::single_char(n.ch);
    for (const auto& c : n.children) collect_literals(c, out);
  }

  static bool within_one_edit(const std::string& a, const std::string& b) {
    if (a == b) return false;
    const std::string& s = a.size() <= b.size() ? a : b;
    const std::string& t = a.size() <= b.size() ? b : a;
    if (t.size() - s.size() > 1) return false;
    std::size_t i = 0;
    while (i < s.size() && s[i] == t[i]) ++i;
    if (s.size() == t.size()) return s.compare(i + 1, std::string::npos, t, i + 1, std::string::npos) == 0;
    return s.compare(i, std::string::npos, t, i + 1, std::string::npos) == 0;
  }

  FeatureLayout layout_;
  int len_ = 0, novel_ = 0, cover_ = 0, minority_ = 0, edit1_ = 0, prefix_ = 0, empty_ = 0, run_ = 0, distinct_ = 0, step_ = 0,
      foreign_ = 0, shorter_ = 0;
};

inline const SpeakerFeatures& speaker_features() {
  static const SpeakerFeatures f;
  return f;
}

}  // namespace models

/// Log-linear speaker S(example | program, prior examples).
class SpeakerSnapshot {
 public:
  SpeakerSnapshot() : SpeakerSnapshot(SpeakerSettings{}) {}

  explicit SpeakerSnapshot(SpeakerSettings settings, int version = 0) : settings_(std::move(settings)), version_(version) {
    settings_.validate();
    weights_.assign(static_cast<std::size_t>(models::speaker_features().layout().size()), 0.0);
  }

  SpeakerSnapshot(SpeakerSettings settings, std::vector<double> weights, double polarity_bias, int version)
      : settings_(std::move(settings)), weights_(std::move(weights)), polarity_bias_(polarity_bias), version_(version) {
    settings_.validate();
    if (weights_.size() != static_cast<std::size_t>(models::speaker_features().layout().size()))
      throw std::invalid_argument("speaker weight count mismatch");
    for (double x : weights_)
      if (!std::isfinite(x)) throw std::invalid_argument("speaker weights must be finite");
    if (!std::isfinite(polarity_bias_)) throw std::invalid_argument("speaker polarity bias must be finite");
  }

  const SpeakerSettings& settings() const noexcept { return settings_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double polarity_bias() const noexcept { return polarity_bias_; }
  int version() const noexcept { return version_; }

  std::map<std::string, double> example_feature_weights() const {
    const auto names = models::speaker_features().layout().names();
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < names.size(); ++i) out[names[i]] = weights_[i];
    return out;
  }

  double score(const Example& e, const models::SpeakerFeatures::Context& ctx) const {
    return models::dot(weights_, models::speaker_features().features(e, ctx)) + (e.label ? polarity_bias_ : 0.0);
  }

  friend bool operator==(const SpeakerSnapshot& a, const SpeakerSnapshot& b) {
    return a.version_ == b.version_ && a.settings_ == b.settings_ && a.weights_ == b.weights_ &&
           a.polarity_bias_ == b.polarity_bias_;
  }

 private:
  SpeakerSettings settings_;
  std::vector<double> weights_;
  double polarity_bias_ = 0.0;
  int version_ = 0;
};

inline double speaker_score(const SpeakerSnapshot& snap, const Example& example, const RegexProgram& program,
                            const Specification& partial) {
  return snap.score(example, models::SpeakerFeatures::context(program, partial));
}

namespace models {

/// Draws distinct consistent candidates, half positive and half negative
/// where both polarities exist, skipping texts already in partial.
class CandidateSource {
 public:
  CandidateSource(const RegexProgram& program, const ExampleSpace& space)
      : program_(program), positives_(program, space), negatives_(program, space) {}

  std::vector<Example> draw(int count, const Specification& partial, Rng& rng, const std::set<std::string>& exclude = {}) const {
    std::vector<Example> out;
    std::set<std::string> seen = exclude;
    for (const auto& e : partial) seen.insert(e.text);
    const bool can_pos = !positives_.empty(), can_neg = !negatives_.empty();
    if (!can_pos && !can_neg) return out;
    for (int i = 0; i < count; ++i) {
      const bool positive = can_pos && (!can_neg || rng.bernoulli(0.5));
      std::string s = positive ? positives_.draw(rng) : negatives_.draw(rng);
      if (seen.insert(s).second) out.push_back({std::move(s), positive});
    }
    return out;
  }

 private:
  RegexProgram program_;
  PathSampler positives_;
  NegativeSampler negatives_;
};

}  // namespace models

/// Up to n distinct examples consistent with program and new to partial,
/// drawn without replacement in proportion to exp(score).
inline std::vector<ScoredExample> speaker_propose(const SpeakerSnapshot& snap, const RegexProgram& program,
                                                  const Specification& partial, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("speaker_propose needs n >= 1");
  const models::CandidateSource source(program, snap.settings().space);
  const auto pool = source.draw(n * snap.settings().pool_factor, partial, rng);
  const auto ctx = models::SpeakerFeatures::context(program, partial);
  std::vector<std::pair<double, ScoredExample>> keyed;
  for (const auto& e : pool) {
    const double s = snap.score(e, ctx);
    keyed.push_back({s + rng.gumbel(), {e, s}});
  }
  std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<ScoredExample> out;
  for (std::size_t i = 0; i < keyed.size() && static_cast<int>(i) < n; ++i) out.push_back(std::move(keyed[i].second));
  return out;
}

namespace models {

/// One autoregressive factor: the observed example against its contrast set.
struct SpeakerFactor {
  std::vector<FeatureList> options;  // options[0] is the observed example
  std::vector<int> positive;
};

inline std::vector<SpeakerFactor> speaker_factors(const SpeakerSnapshot& snap, const DatasetEntry& d) {
  std::vector<SpeakerFactor> out;
  const CandidateSource source(d.program, snap.settings().space);
  const auto& feats = speaker_features();
  for (std::size_t i = 0; i < d.spec.size(); ++i) {
    const auto partial = d.spec.prefix(i);
    const auto ctx = SpeakerFeatures::context(d.program, partial);
    std::string key = d.program.text();
    for (const auto& e : partial) key += '\x1f' + e.text;
    Rng rng(derive_seed(stable_hash(key), i));
    SpeakerFactor f;
    f.options.push_back(feats.features(d.spec[i], ctx));
    f.positive.push_back(d.spec[i].label);
    for (const auto& e : source.draw(snap.settings().contrast_size, partial, rng, {d.spec[i].text})) {
      f.options.push_back(feats.features(e, ctx));
      f.positive.push_back(e.label);
    }
    out.push_back(std::move(f));
  }
  return out;
}

inline std::vector<double> factor_scores(const std::vector<double>& w, double bias, const SpeakerFactor& f) {
  std::vector<double> s(f.options.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = dot(w, f.options[i]) + (f.positive[i] ? bias : 0.0);
  return s;
}

}  // namespace models

/// Mean negative log-likelihood per example, each factor normalized over
/// the observed example and a contrast set fixed by the data.
inline double speaker_nll(const SpeakerSnapshot& snap, const Dataset& validation) {
  if (validation.empty()) throw std::invalid_argument("speaker_nll needs data");
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& d : validation)
    for (const auto& f : models::speaker_factors(snap, d)) {
      const auto s = models::factor_scores(snap.weights(), snap.polarity_bias(), f);
      total += models::log_sum_exp(s) - s[0];
      ++count;
    }
  return count ? total / static_cast<double>(count) : 0.0;
}

/// Stochastic gradient ascent on the factor log-likelihoods, starting from base.
inline SpeakerSnapshot train_speaker(const SpeakerSnapshot& base, const Dataset& data, const TrainConfig& cfg, int version) {
  require_consistent(data);
  std::vector<models::SpeakerFactor> factors;
  for (const auto& d : data)
    for (auto& f : models::speaker_factors(base, d)) factors.push_back(std::move(f));
  auto w = base.weights();
  double bias = base.polarity_bias();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(std::span(factors));
    for (const auto& f : factors) {
      const auto s = models::factor_scores(w, bias, f);
      const double z = models::log_sum_exp(s);
      double g_bias = f.positive[0] ? 1.0 : 0.0;
      std::vector<std::pair<int, double>> g;
      for (int k : f.options[0]) g.emplace_back(k, 1.0);
      for (std::size_t i = 0; i < s.size(); ++i) {
        const double p = std::exp(s[i] - z);
        for (int k : f.options[i]) g.emplace_back(k, -p);
        if (f.positive[i]) g_bias -= p;
      }
      for (auto [k, v] : g) w[static_cast<std::size_t>(k)] += cfg.lr * v;
      bias += cfg.lr * g_bias;
    }
  }
  return SpeakerSnapshot(base.settings(), std::move(w), bias, version);
}

}  // namespace prax
