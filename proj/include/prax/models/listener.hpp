#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "prax/models/common.hpp"
#include "prax/rng.hpp"

namespace prax {

using regex::CharClass;
using regex::CharSet;
using regex::Node;
using regex::NodeKind;

/// Grammar shape of the listener.  Programs outside it get a fixed low score.
struct ListenerSettings {
  std::string literals = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-.,";
  std::vector<CharClass> classes{regex::kAllClasses.begin(), regex::kAllClasses.end()};
  int max_tokens = 30;
  int max_arity = 8;
  int max_repeat = regex::kMaxRepeat;
  int max_depth = 4;

  void validate() const {
    if (literals.empty() && classes.empty()) throw std::invalid_argument("listener needs literals or classes");
    if (max_tokens < 1) throw std::invalid_argument("listener.max_tokens must be >= 1");
    if (max_arity < 2) throw std::invalid_argument("listener.max_arity must be >= 2");
    if (max_repeat < 1 || max_repeat > regex::kMaxRepeat) throw std::invalid_argument("listener.max_repeat out of range");
    if (max_depth < 1) throw std::invalid_argument("listener.max_depth must be >= 1");
  }

  friend bool operator==(const ListenerSettings&, const ListenerSettings&) = default;
};

namespace models {

/// Summary of a specification used by the listener's conditional features.
struct SpecStats {
  std::vector<std::string> pos, neg;
  CharSet pos_chars, neg_chars, every_pos_chars;
  CharSet first_some, first_all, last_some, last_all;
  int n_examples = 0;
  int min_pos_len = 0, max_pos_len = 0;
  bool empty_pos = false, empty_neg = false, equal_lengths = true;

  explicit SpecStats(const Specification& spec) {
    n_examples = static_cast<int>(spec.size());
    first_all.set();
    last_all.set();
    every_pos_chars.set();
    for (const auto& e : spec) {
      if (!e.label) {
        neg.push_back(e.text);
        neg_chars |= regex::chars_of(e.text);
        empty_neg |= e.text.empty();
        continue;
      }
      const int len = static_cast<int>(e.text.size());
      if (pos.empty()) {
        min_pos_len = max_pos_len = len;
      } else {
        equal_lengths &= len == min_pos_len && len == max_pos_len;
        min_pos_len = std::min(min_pos_len, len);
        max_pos_len = std::max(max_pos_len, len);
      }
      pos.push_back(e.text);
      const CharSet cs = regex::chars_of(e.text);
      pos_chars |= cs;
      every_pos_chars &= cs;
      empty_pos |= e.text.empty();
      const CharSet f = e.text.empty() ? CharSet{} : regex::single_char(e.text.front());
      const CharSet l = e.text.empty() ? CharSet{} : regex::single_char(e.text.back());
      first_some |= f;
      first_all &= f;
      last_some |= l;
      last_all &= l;
    }
    if (pos.empty()) {
      first_all.reset();
      last_all.reset();
      every_pos_chars.reset();
    }
  }
};

enum Ctx : int { kTop, kConcatChild, kAltChild, kQuantChild, kNumCtx };
enum Kind : int { kLit, kCls, kCat, kAlt, kQuant, kNumKinds };

/// Anchoring of a node within the top-level sequence.
struct Anchor {
  bool first = true, last = true;
};

/// Feature templates and option sets of the listener's generative grammar.
/// A derivation chooses a node kind per context, then arity, symbol, or
/// quantifier; every choice is a softmax over its options.
class ListenerGrammar {
 public:
  explicit ListenerGrammar(ListenerSettings s) : s_(std::move(s)) {
    s_.validate();
    const std::vector<std::string> ctx{"top", "concat", "alt", "quant"};
    const std::vector<std::string> kinds{"lit", "class", "concat", "alt", "quant"};
    const std::vector<std::string> depth{"d0", "d1", "d2+"};
    const std::vector<std::string> nb{"n0", "n1", "n2", "n3-4", "n5+"};
    std::vector<std::string> lits, classes;
    for (char c : s_.literals) lits.push_back(std::string("'") + c + "'");
    for (auto c : s_.classes) classes.emplace_back(regex::class_name(c));
    for (int op = 0; op < 3; ++op) quant_ops_.push_back({op, 0, 0});
    for (int lo = 1; lo <= s_.max_repeat; ++lo)
      for (int hi = lo; hi <= s_.max_repeat; ++hi) quant_ops_.push_back({3, lo, hi});
    std::vector<std::string> qlabels;
    for (const auto& q : quant_ops_)
      qlabels.push_back(q.op == 0   ? "*"
                        : q.op == 1 ? "+"
                        : q.op == 2 ? "?"
                                    : "{" + std::to_string(q.lo) + "," + std::to_string(q.hi) + "}");

    kind_bias_ = layout_.add("kind", {ctx, depth, kinds}, false);
    kind_len_ = layout_.add("kind.poslen", {ctx, kinds, {"none", "0", "1", "2", "3", "4-5", "6-8", "9+"}}, true);
    kind_var_ = layout_.add("kind.lengths", {ctx, kinds, {"equal", "differ", "few"}}, true);
    kind_distinct_ = layout_.add("kind.distinct", {ctx, kinds, {"0", "1", "2", "3+"}}, true);
    kind_empty_ = layout_.add("kind.emptypos", {ctx, kinds, {"yes", "no"}}, true);
    kind_neg_ = layout_.add("kind.negatives", {ctx, kinds, {"0", "1", "2+"}}, true);
    arity_bias_ = layout_.add("arity", {{"concat", "alt"}, ctx, range_labels(2, s_.max_arity)}, false);
    arity_cond_ = layout_.add("arity.spec", {{"concat", "alt"}, ctx,
                                             {"eq_min_len", "eq_max_len", "le_min_len", "gt_max_len", "eq_distinct", "eq_npos"}},
                              true);
    if (!lits.empty()) {
      lit_bias_ = layout_.add("lit", {ctx, lits}, false);
      lit_rel_ = layout_.add("lit.spec", {{"in_pos", "in_every_pos", "neg_only", "absent", "in_neg"}, nb}, true);
      lit_anchor_ = layout_.add("lit.anchor", {{"first", "last"}, {"some", "all", "none"}}, true);
    }
    if (!classes.empty()) {
      class_bias_ = layout_.add("class", {ctx, classes}, false);
      class_rel_ = layout_.add("class.spec", {classes, {"covers_all_pos", "covers_some_pos", "covers_neg_only", "covers_no_pos"}, nb}, true);
      class_anchor_ = layout_.add("class.anchor", {classes, {"first", "last"}, {"some", "all", "none"}}, true);
    }
    quant_bias_ = layout_.add("quant", {ctx, qlabels}, false);
    quant_cond_ = layout_.add("quant.spec", {{"*", "+", "?", "{n}", "{m,n}"},
                                             {"pos_zero", "pos_multi", "pos_all_one", "neg_zero", "neg_multi", "no_pos", "empty_pos",
                                              "empty_neg", "lo_match", "hi_match", "lo_above", "hi_below"}},
                              true);
  }

  const ListenerSettings& settings() const noexcept { return s_; }
  const FeatureLayout& layout() const noexcept { return layout_; }

  struct KindChoice {
    Choice choice;
    std::vector<Kind> kinds;
  };

  KindChoice kind_choice(Ctx ctx, int depth, const SpecStats& st) const {
    KindChoice out;
    for (int k = 0; k < kNumKinds; ++k) {
      if (k == kLit && s_.literals.empty()) continue;
      if (k == kCls && s_.classes.empty()) continue;
      if (k >= kCat && depth >= s_.max_depth) continue;
      if (k == kCat && ctx == kConcatChild) continue;
      if (k == kAlt && ctx == kAltChild) continue;
      out.kinds.push_back(static_cast<Kind>(k));
      const int len_b = st.pos.empty() ? 0 : 1 + bucket(st.max_pos_len, {0, 1, 2, 3, 5, 8});
      const int var_b = st.pos.size() < 2 ? 2 : (st.equal_lengths ? 0 : 1);
      const int distinct_b = bucket(static_cast<int>(st.pos_chars.count()), {0, 1, 2});
      const int neg_b = bucket(static_cast<int>(st.neg.size()), {0, 1});
      out.choice.options.push_back({layout_.index(kind_bias_, {ctx, std::min(depth, 2), k}),
                                    layout_.index(kind_len_, {ctx, k, len_b}),
                                    layout_.index(kind_var_, {ctx, k, var_b}),
                                    layout_.index(kind_distinct_, {ctx, k, distinct_b}),
                                    layout_.index(kind_empty_, {ctx, k, st.empty_pos ? 0 : 1}),
                                    layout_.index(kind_neg_, {ctx, k, neg_b})});
    }
    return out;
  }

  /// Options are arities 2..max_arity.
  Choice arity_choice(Kind kind, Ctx ctx, const SpecStats& st) const {
    Choice c;
    const int kk = kind == kCat ? 0 : 1;
    const int distinct = static_cast<int>(st.pos_chars.count());
    for (int a = 2; a <= s_.max_arity; ++a) {
      FeatureList f{layout_.index(arity_bias_, {kk, ctx, a - 2})};
      if (!st.pos.empty()) {
        if (a == st.min_pos_len) f.push_back(layout_.index(arity_cond_, {kk, ctx, 0}));
        if (a == st.max_pos_len) f.push_back(layout_.index(arity_cond_, {kk, ctx, 1}));
        if (a <= st.min_pos_len) f.push_back(layout_.index(arity_cond_, {kk, ctx, 2}));
        if (a > st.max_pos_len) f.push_back(layout_.index(arity_cond_, {kk, ctx, 3}));
        if (a == distinct) f.push_back(layout_.index(arity_cond_, {kk, ctx, 4}));
        if (a == static_cast<int>(st.pos.size())) f.push_back(layout_.index(arity_cond_, {kk, ctx, 5}));
      }
      c.options.push_back(std::move(f));
    }
    return c;
  }

  /// Options follow settings().literals.
  Choice literal_choice(Ctx ctx, Anchor anchor, const SpecStats& st) const {
    Choice c;
    const int nb = n_bucket(st);
    for (std::size_t i = 0; i < s_.literals.size(); ++i) {
      const auto ch = static_cast<unsigned char>(s_.literals[i]);
      FeatureList f{layout_.index(lit_bias_, {ctx, static_cast<int>(i)})};
      const bool in_pos = st.pos_chars[ch], in_neg = st.neg_chars[ch];
      if (in_pos) f.push_back(layout_.index(lit_rel_, {0, nb}));
      if (st.every_pos_chars[ch]) f.push_back(layout_.index(lit_rel_, {1, nb}));
      if (in_neg && !in_pos) f.push_back(layout_.index(lit_rel_, {2, nb}));
      if (!in_neg && !in_pos) f.push_back(layout_.index(lit_rel_, {3, nb}));
      if (in_neg) f.push_back(layout_.index(lit_rel_, {4, nb}));
      if (!st.pos.empty()) {
        const CharSet one = regex::single_char(static_cast<char>(ch));
        if (anchor.first) f.push_back(layout_.index(lit_anchor_, {0, anchor_rel(one, st.first_some, st.first_all)}));
        if (anchor.last) f.push_back(layout_.index(lit_anchor_, {1, anchor_rel(one, st.last_some, st.last_all)}));
      }
      c.options.push_back(std::move(f));
    }
    return c;
  }

  /// Options follow settings().classes.
  Choice class_choice(Ctx ctx, Anchor anchor, const SpecStats& st) const {
    Choice c;
    const int nb = n_bucket(st);
    for (std::size_t i = 0; i < s_.classes.size(); ++i) {
      const int k = static_cast<int>(i);
      const CharSet cs = regex::class_chars(s_.classes[i]);
      FeatureList f{layout_.index(class_bias_, {ctx, k})};
      if (!st.pos.empty()) {
        const CharSet covered = cs & st.pos_chars;
        if (covered == st.pos_chars) f.push_back(layout_.index(class_rel_, {k, 0, nb}));
        if (covered.any()) f.push_back(layout_.index(class_rel_, {k, 1, nb}));
        if (covered.none()) f.push_back(layout_.index(class_rel_, {k, 3, nb}));
        if (anchor.first) f.push_back(layout_.index(class_anchor_, {k, 0, anchor_rel(cs, st.first_some, st.first_all)}));
        if (anchor.last) f.push_back(layout_.index(class_anchor_, {k, 1, anchor_rel(cs, st.last_some, st.last_all)}));
      }
      if ((cs & st.neg_chars & ~st.pos_chars).any()) f.push_back(layout_.index(class_rel_, {k, 2, nb}));
      c.options.push_back(std::move(f));
    }
    return c;
  }

  struct QuantOp {
    int op;  // 0 star, 1 plus, 2 opt, 3 repeat
    int lo, hi;
  };
  const std::vector<QuantOp>& quant_ops() const noexcept { return quant_ops_; }

  /// Options follow quant_ops(); features relate the quantified child to the spec.
  Choice quant_choice(Ctx ctx, const Node& child, const SpecStats& st) const {
    const CharSet cs = regex::node_chars(child);
    const int unit = std::max(1, regex::min_length(child));
    auto reps = [&](const std::string& s) {
      int k = 0;
      for (char ch : s) k += cs[static_cast<unsigned char>(ch)] ? 1 : 0;
      return k / unit;
    };
    bool pos_zero = false, pos_multi = false, all_one = !st.pos.empty(), neg_zero = false, neg_multi = false;
    int min_r = 1 << 20, max_r = 0;
    for (const auto& s : st.pos) {
      const int r = reps(s);
      pos_zero |= r == 0;
      pos_multi |= r >= 2;
      all_one &= r == 1;
      min_r = std::min(min_r, r);
      max_r = std::max(max_r, r);
    }
    for (const auto& s : st.neg) {
      const int r = reps(s);
      neg_zero |= r == 0;
      neg_multi |= r >= 2;
    }
    Choice c;
    for (std::size_t i = 0; i < quant_ops_.size(); ++i) {
      const auto& q = quant_ops_[i];
      const int g = q.op < 3 ? q.op : (q.lo == q.hi ? 3 : 4);
      FeatureList f{layout_.index(quant_bias_, {ctx, static_cast<int>(i)})};
      auto add = [&](bool on, int feature) {
        if (on) f.push_back(layout_.index(quant_cond_, {g, feature}));
      };
      add(pos_zero, 0);
      add(pos_multi, 1);
      add(all_one, 2);
      add(neg_zero, 3);
      add(neg_multi, 4);
      add(st.pos.empty(), 5);
      add(st.empty_pos, 6);
      add(st.empty_neg, 7);
      if (q.op == 3 && !st.pos.empty()) {
        add(q.lo == min_r, 8);
        add(q.hi == max_r, 9);
        add(q.lo > min_r, 10);
        add(q.hi < max_r, 11);
      }
      c.options.push_back(std::move(f));
    }
    return c;
  }

  int literal_index(char ch) const {
    const auto pos = s_.literals.find(ch);
    return pos == std::string::npos ? -1 : static_cast<int>(pos);
  }

  int class_index(CharClass cls) const {
    for (std::size_t i = 0; i < s_.classes.size(); ++i)
      if (s_.classes[i] == cls) return static_cast<int>(i);
    return -1;
  }

  int quant_index(const Node& n) const {
    for (std::size_t i = 0; i < quant_ops_.size(); ++i) {
      const auto& q = quant_ops_[i];
      if ((n.kind == NodeKind::Star && q.op == 0) || (n.kind == NodeKind::Plus && q.op == 1) ||
          (n.kind == NodeKind::Opt && q.op == 2) || (n.kind == NodeKind::Repeat && q.op == 3 && q.lo == n.lo && q.hi == n.hi))
        return static_cast<int>(i);
    }
    return -1;
  }

 private:
  static int n_bucket(const SpecStats& st) { return bucket(st.n_examples, {0, 1, 2, 4}); }

  static int anchor_rel(const CharSet& cs, const CharSet& some, const CharSet& all) {
    if (all.any() && (all & ~cs).none()) return 1;
    return (cs & some).any() ? 0 : 2;
  }

  ListenerSettings s_;
  FeatureLayout layout_;
  std::vector<QuantOp> quant_ops_;
  int kind_bias_ = 0, kind_len_ = 0, kind_var_ = 0, kind_distinct_ = 0, kind_empty_ = 0, kind_neg_ = 0;
  int arity_bias_ = 0, arity_cond_ = 0;
  int lit_bias_ = -1, lit_rel_ = -1, lit_anchor_ = -1;
  int class_bias_ = -1, class_rel_ = -1, class_anchor_ = -1;
  int quant_bias_ = 0, quant_cond_ = 0;
};

inline Kind kind_of(const Node& n) {
  switch (n.kind) {
    case NodeKind::Literal: return kLit;
    case NodeKind::Class: return kCls;
    case NodeKind::Concat: return kCat;
    case NodeKind::Alt: return kAlt;
    default: return kQuant;
  }
}

/// Calls visit(choice) for every decision of n's derivation, in generation order.
template <class Visit>
void derive(const ListenerGrammar& g, const Node& n, Ctx ctx, int depth, Anchor anchor, const SpecStats& st, Visit&& visit) {
  auto kc = g.kind_choice(ctx, depth, st);
  const Kind k = kind_of(n);
  const auto it = std::find(kc.kinds.begin(), kc.kinds.end(), k);
  kc.choice.chosen = it == kc.kinds.end() ? -1 : static_cast<int>(it - kc.kinds.begin());
  visit(kc.choice);
  switch (k) {
    case kLit: {
      auto c = g.literal_choice(ctx, anchor, st);
      c.chosen = g.literal_index(n.ch);
      visit(c);
      return;
    }
    case kCls: {
      auto c = g.class_choice(ctx, anchor, st);
      c.chosen = g.class_index(n.cls);
      visit(c);
      return;
    }
    case kCat:
    case kAlt: {
      auto c = g.arity_choice(k, ctx, st);
      const int a = static_cast<int>(n.children.size());
      c.chosen = a <= g.settings().max_arity ? a - 2 : -1;
      visit(c);
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        Anchor sub = anchor;
        if (k == kCat) {
          sub.first = anchor.first && i == 0;
          sub.last = anchor.last && i + 1 == n.children.size();
        }
        derive(g, n.children[i], k == kCat ? kConcatChild : kAltChild, depth + 1, sub, st, visit);
      }
      return;
    }
    default: {
      derive(g, n.child(), kQuantChild, depth + 1, anchor, st, visit);
      auto c = g.quant_choice(ctx, n.child(), st);
      c.chosen = g.quant_index(n);
      visit(c);
      return;
    }
  }
}

/// Draws a derivation; log_prob accumulates its log-probability.  Returns
/// nothing when the tree outgrows node_budget.
inline std::optional<Node> sample_tree(const ListenerGrammar& g, const std::vector<double>& w, Ctx ctx, int depth, Anchor anchor,
                                       const SpecStats& st, Rng& rng, double& log_prob, int& node_budget) {
  if (--node_budget < 0) return std::nullopt;
  auto pick = [&](const Choice& c) {
    std::vector<double> s(c.options.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = dot(w, c.options[i]);
    const std::size_t k = rng.categorical_logits(s);
    log_prob += s[k] - log_sum_exp(s);
    return k;
  };
  const auto kc = g.kind_choice(ctx, depth, st);
  const Kind k = kc.kinds[pick(kc.choice)];
  switch (k) {
    case kLit: return Node::literal(g.settings().literals[pick(g.literal_choice(ctx, anchor, st))]);
    case kCls: return Node::char_class(g.settings().classes[pick(g.class_choice(ctx, anchor, st))]);
    case kCat:
    case kAlt: {
      const int arity = static_cast<int>(pick(g.arity_choice(k, ctx, st))) + 2;
      std::vector<Node> parts;
      for (int i = 0; i < arity; ++i) {
        Anchor sub = anchor;
        if (k == kCat) {
          sub.first = anchor.first && i == 0;
          sub.last = anchor.last && i + 1 == arity;
        }
        auto child = sample_tree(g, w, k == kCat ? kConcatChild : kAltChild, depth + 1, sub, st, rng, log_prob, node_budget);
        if (!child) return std::nullopt;
        parts.push_back(std::move(*child));
      }
      Node n;
      n.kind = k == kCat ? NodeKind::Concat : NodeKind::Alt;
      n.children = std::move(parts);
      return n;
    }
    default: {
      auto child = sample_tree(g, w, kQuantChild, depth + 1, anchor, st, rng, log_prob, node_budget);
      if (!child) return std::nullopt;
      const auto& q = g.quant_ops()[pick(g.quant_choice(ctx, *child, st))];
      static constexpr NodeKind kinds[] = {NodeKind::Star, NodeKind::Plus, NodeKind::Opt, NodeKind::Repeat};
      return Node::unary(kinds[q.op], std::move(*child), q.lo, q.hi);
    }
  }
}

}  // namespace models

/// Log-linear listener L(program | spec).  Immutable value; copies share
/// the grammar tables.
class ListenerSnapshot {
 public:
  ListenerSnapshot() : ListenerSnapshot(ListenerSettings{}) {}

  explicit ListenerSnapshot(const ListenerSettings& settings, int version = 0)
      : grammar_(std::make_shared<const models::ListenerGrammar>(settings)), version_(version) {
    weights_.assign(static_cast<std::size_t>(grammar_->layout().size()), 0.0);
  }

  /// weights must match the layout of settings.
  ListenerSnapshot(const ListenerSettings& settings, std::vector<double> weights, int version)
      : grammar_(std::make_shared<const models::ListenerGrammar>(settings)), weights_(std::move(weights)), version_(version) {
    if (weights_.size() != static_cast<std::size_t>(grammar_->layout().size()))
      throw std::invalid_argument("listener weight count does not match its settings");
    for (double x : weights_)
      if (!std::isfinite(x)) throw std::invalid_argument("listener weights must be finite");
  }

  const ListenerSettings& settings() const noexcept { return grammar_->settings(); }
  const models::ListenerGrammar& grammar() const noexcept { return *grammar_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  int version() const noexcept { return version_; }

  ListenerSnapshot with_weights(std::vector<double> w, int version) const {
    ListenerSnapshot s = *this;
    if (w.size() != weights_.size()) throw std::invalid_argument("listener weight count mismatch");
    s.weights_ = std::move(w);
    s.version_ = version;
    return s;
  }

  /// Unconditioned production weights, by name.
  std::map<std::string, double> grammar_weights() const { return named(false); }
  /// Weights of spec-conditioned features, by name.
  std::map<std::string, double> spec_feature_weights() const { return named(true); }

  friend bool operator==(const ListenerSnapshot& a, const ListenerSnapshot& b) {
    return a.version_ == b.version_ && a.settings() == b.settings() && a.weights_ == b.weights_;
  }

 private:
  std::map<std::string, double> named(bool conditional) const {
    const auto names = grammar_->layout().names();
    const auto mask = grammar_->layout().conditional_mask();
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < names.size(); ++i)
      if (mask[i] == conditional) out[names[i]] = weights_[i];
    return out;
  }

  std::shared_ptr<const models::ListenerGrammar> grammar_;
  std::vector<double> weights_;
  int version_ = 0;
};

/// Log-probability of program's derivation given spec.
inline double listener_score(const ListenerSnapshot& snap, const RegexProgram& program, const Specification& spec) {
  const models::SpecStats st(spec);
  double lp = 0.0;
  models::derive(snap.grammar(), program.ast(), models::kTop, 0, {}, st,
                 [&](const models::Choice& c) { lp += models::choice_log_prob(snap.weights(), c); });
  return lp;
}

/// n independent draws, duplicates kept; draws over the token budget are dropped.
inline std::vector<ScoredProgram> listener_sample(const ListenerSnapshot& snap, const Specification& spec, int n, Rng& rng) {
  const models::SpecStats st(spec);
  std::vector<ScoredProgram> out;
  const int max_tokens = snap.settings().max_tokens;
  for (int i = 0; i < n; ++i) {
    double lp = 0.0;
    int budget = 2 * max_tokens + 2;
    auto tree = models::sample_tree(snap.grammar(), snap.weights(), models::kTop, 0, {}, st, rng, lp, budget);
    if (!tree) continue;
    RegexProgram p(std::move(*tree));
    if (static_cast<int>(p.size()) > max_tokens) continue;
    out.push_back({std::move(p), lp});
  }
  return out;
}

/// Up to n distinct programs, from at most 20n draws.  Not filtered for consistency with spec.
inline std::vector<ScoredProgram> listener_propose(const ListenerSnapshot& snap, const Specification& spec, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("listener_propose needs n >= 1");
  std::vector<ScoredProgram> out;
  std::unordered_set<std::string> seen;
  for (int attempt = 0; attempt < 20 * n && static_cast<int>(out.size()) < n; ++attempt) {
    for (auto& sp : listener_sample(snap, spec, 1, rng))
      if (seen.insert(sp.program.text()).second) out.push_back(std::move(sp));
  }
  return out;
}

struct TrainConfig {
  int epochs = 5;
  double lr = 0.1;
  std::uint64_t seed = 0;
  /// Train on every non-empty prefix of each spec instead of the full spec.
  bool prefixes = true;
};

namespace models {

inline std::vector<std::pair<std::size_t, std::size_t>> training_pairs(const Dataset& data, bool prefixes) {
  std::vector<std::pair<std::size_t, std::size_t>> out;  // (entry, prefix length)
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!prefixes || data[i].spec.empty()) {
      out.emplace_back(i, data[i].spec.size());
      continue;
    }
    for (std::size_t k = 1; k <= data[i].spec.size(); ++k) out.emplace_back(i, k);
  }
  return out;
}

}  // namespace models

/// Mean negative log-likelihood of programs given their specs.
inline double listener_nll(const ListenerSnapshot& snap, const Dataset& data, bool prefixes = false) {
  if (data.empty()) throw std::invalid_argument("listener_nll needs data");
  const auto pairs = models::training_pairs(data, prefixes);
  double total = 0.0;
  for (auto [i, k] : pairs) total -= listener_score(snap, data[i].program, data[i].spec.prefix(k));
  return total / static_cast<double>(pairs.size());
}

/// Stochastic gradient ascent on log-likelihood, starting from base.
inline ListenerSnapshot train_listener(const ListenerSnapshot& base, const Dataset& data, const TrainConfig& cfg, int version) {
  require_consistent(data);
  auto w = base.weights();
  auto pairs = models::training_pairs(data, cfg.prefixes);
  std::vector<double> grad(w.size(), 0.0);
  std::vector<int> touched;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(std::span(pairs));
    for (auto [i, k] : pairs) {
      const models::SpecStats st(data[i].spec.prefix(k));
      models::derive(base.grammar(), data[i].program.ast(), models::kTop, 0, {}, st, [&](const models::Choice& c) {
        models::accumulate_gradient(w, c, 1.0, grad);
        for (const auto& o : c.options) touched.insert(touched.end(), o.begin(), o.end());
      });
      for (int f : touched) {
        auto& g = grad[static_cast<std::size_t>(f)];
        w[static_cast<std::size_t>(f)] += cfg.lr * g;
        g = 0.0;
      }
      touched.clear();
    }
  }
  return base.with_weights(std::move(w), version);
}

}  // namespace prax
