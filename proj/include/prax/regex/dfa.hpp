#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "prax/regex/ast.hpp"

namespace prax::regex {

/// Thompson NFA.  Each state has at most one character-set edge plus any
/// number of epsilon edges.
struct Nfa {
  struct State {
    int set = -1;  // index into sets, or -1
    int out = -1;  // target of the set edge
    std::vector<int> eps;
  };
  std::vector<State> states;
  std::vector<CharSet> sets;
  int start = 0;
  int accept = 0;

  static Nfa build(const Node& root) {
    Nfa nfa;
    auto [s, t] = nfa.fragment(root);
    nfa.start = s;
    nfa.accept = t;
    return nfa;
  }

 private:
  int add() {
    states.emplace_back();
    return static_cast<int>(states.size()) - 1;
  }
  void eps(int from, int to) { states[static_cast<std::size_t>(from)].eps.push_back(to); }

  int set_index(const CharSet& cs) {
    for (std::size_t i = 0; i < sets.size(); ++i)
      if (sets[i] == cs) return static_cast<int>(i);
    sets.push_back(cs);
    return static_cast<int>(sets.size()) - 1;
  }

  std::pair<int, int> fragment(const Node& n) {
    switch (n.kind) {
      case NodeKind::Literal:
      case NodeKind::Class: {
        const int s = add(), t = add();
        states[static_cast<std::size_t>(s)].set =
            set_index(n.kind == NodeKind::Literal ? single_char(n.ch) : class_chars(n.cls));
        states[static_cast<std::size_t>(s)].out = t;
        return {s, t};
      }
      case NodeKind::Concat: {
        auto [s, t] = fragment(n.children.front());
        for (std::size_t i = 1; i < n.children.size(); ++i) {
          auto [cs, ct] = fragment(n.children[i]);
          eps(t, cs);
          t = ct;
        }
        return {s, t};
      }
      case NodeKind::Alt: {
        const int s = add(), t = add();
        for (const auto& c : n.children) {
          auto [cs, ct] = fragment(c);
          eps(s, cs);
          eps(ct, t);
        }
        return {s, t};
      }
      case NodeKind::Star: {
        const int s = add(), t = add();
        auto [cs, ct] = fragment(n.child());
        eps(s, cs);
        eps(s, t);
        eps(ct, cs);
        eps(ct, t);
        return {s, t};
      }
      case NodeKind::Plus: {
        auto [cs, ct] = fragment(n.child());
        const int t = add();
        eps(ct, cs);
        eps(ct, t);
        return {cs, t};
      }
      case NodeKind::Opt: {
        const int s = add(), t = add();
        auto [cs, ct] = fragment(n.child());
        eps(s, cs);
        eps(s, t);
        eps(ct, t);
        return {s, t};
      }
      case NodeKind::Repeat: {
        const int s = add();
        int cur = s;
        for (int i = 0; i < n.lo; ++i) {
          auto [cs, ct] = fragment(n.child());
          eps(cur, cs);
          cur = ct;
        }
        const int t = add();
        for (int i = n.lo; i < n.hi; ++i) {
          auto [cs, ct] = fragment(n.child());
          eps(cur, cs);
          eps(cur, t);
          cur = ct;
        }
        eps(cur, t);
        return {s, t};
      }
    }
    throw std::logic_error("unreachable node kind");
  }
};

/// Minimal, total DFA over the printable-ASCII alphabet in canonical
/// numbering (breadth-first from the start state, characters ascending).
/// Two regexes denote the same language iff their Dfa values compare equal.
class Dfa {
 public:
  static constexpr std::size_t kMaxStates = 1u << 16;

  static Dfa compile(const Node& root);

  int start() const noexcept { return 0; }
  int num_states() const noexcept { return static_cast<int>(accept_.size()); }
  bool accepting(int s) const noexcept { return accept_[static_cast<std::size_t>(s)] != 0; }

  /// Next state, or -1 for characters outside the alphabet.
  int step(int s, char c) const noexcept {
    if (!in_alphabet(c)) return -1;
    return static_cast<int>(next_[static_cast<std::size_t>(s) * kAlphabetSize + static_cast<std::size_t>(c - kFirstChar)]);
  }

  bool matches(std::string_view text) const noexcept {
    int s = 0;
    for (char c : text) {
      s = step(s, c);
      if (s < 0) return false;
    }
    return accepting(s);
  }

  /// True for the non-accepting sink state.
  bool is_dead(int s) const noexcept { return dead_ == s; }

  /// Compact byte string identifying the language.
  const std::string& key() const noexcept { return key_; }

  friend bool operator==(const Dfa& a, const Dfa& b) noexcept { return a.key_ == b.key_; }

 private:
  std::vector<std::uint32_t> next_;
  std::vector<std::uint8_t> accept_;
  int dead_ = -1;
  std::string key_;
};

namespace detail {

inline void closure(const Nfa& nfa, std::vector<int>& set, std::vector<std::uint32_t>& mark, std::uint32_t stamp) {
  std::vector<int> stack(set.begin(), set.end());
  for (int s : set) mark[static_cast<std::size_t>(s)] = stamp;
  while (!stack.empty()) {
    const int s = stack.back();
    stack.pop_back();
    for (int t : nfa.states[static_cast<std::size_t>(s)].eps) {
      if (mark[static_cast<std::size_t>(t)] != stamp) {
        mark[static_cast<std::size_t>(t)] = stamp;
        set.push_back(t);
        stack.push_back(t);
      }
    }
  }
  std::sort(set.begin(), set.end());
}

}  // namespace detail

inline Dfa Dfa::compile(const Node& root) {
  const Nfa nfa = Nfa::build(root);

  // Partition the alphabet into classes of characters no edge distinguishes.
  std::vector<int> class_of(kAlphabetSize, 0);
  std::vector<std::vector<bool>> class_in_set;  // per class, membership in each nfa set
  {
    std::map<std::vector<bool>, int> sig_to_class;
    for (int c = 0; c < kAlphabetSize; ++c) {
      std::vector<bool> sig(nfa.sets.size());
      for (std::size_t k = 0; k < nfa.sets.size(); ++k) sig[k] = nfa.sets[k].test(static_cast<std::size_t>(c + kFirstChar));
      auto [it, fresh] = sig_to_class.emplace(sig, static_cast<int>(sig_to_class.size()));
      if (fresh) class_in_set.push_back(sig);
      class_of[static_cast<std::size_t>(c)] = it->second;
    }
  }
  const std::size_t num_classes = class_in_set.size();

  // Subset construction over character classes.
  std::vector<std::uint32_t> mark(nfa.states.size(), 0);
  std::uint32_t stamp = 0;
  std::map<std::vector<int>, int> ids;
  std::vector<std::vector<int>> subsets;
  std::vector<int> trans;  // subset x class
  std::vector<std::uint8_t> acc;

  std::vector<int> init{nfa.start};
  detail::closure(nfa, init, mark, ++stamp);
  ids.emplace(init, 0);
  subsets.push_back(init);
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    if (subsets.size() > kMaxStates) throw std::length_error("regex automaton exceeds state limit");
    const std::vector<int> cur = subsets[i];
    acc.push_back(std::binary_search(cur.begin(), cur.end(), nfa.accept) ? 1 : 0);
    for (std::size_t k = 0; k < num_classes; ++k) {
      std::vector<int> nxt;
      ++stamp;
      for (int s : cur) {
        const auto& st = nfa.states[static_cast<std::size_t>(s)];
        if (st.set >= 0 && class_in_set[k][static_cast<std::size_t>(st.set)] &&
            mark[static_cast<std::size_t>(st.out)] != stamp) {
          mark[static_cast<std::size_t>(st.out)] = stamp;
          nxt.push_back(st.out);
        }
      }
      detail::closure(nfa, nxt, mark, ++stamp);
      auto [it, fresh] = ids.emplace(nxt, static_cast<int>(subsets.size()));
      if (fresh) subsets.push_back(std::move(nxt));
      trans.push_back(it->second);
    }
  }
  const std::size_t n = subsets.size();

  // Moore partition refinement.
  std::vector<int> block(n);
  for (std::size_t s = 0; s < n; ++s) block[s] = acc[s];
  std::size_t num_blocks = 0;
  for (;;) {
    std::map<std::vector<int>, int> sig_ids;
    std::vector<int> next_block(n);
    for (std::size_t s = 0; s < n; ++s) {
      std::vector<int> sig;
      sig.reserve(num_classes + 1);
      sig.push_back(block[s]);
      for (std::size_t k = 0; k < num_classes; ++k) sig.push_back(block[static_cast<std::size_t>(trans[s * num_classes + k])]);
      auto [it, fresh] = sig_ids.emplace(std::move(sig), static_cast<int>(sig_ids.size()));
      next_block[s] = it->second;
    }
    const std::size_t count = sig_ids.size();
    block.swap(next_block);
    if (count == num_blocks) break;
    num_blocks = count;
  }

  // Representative transitions per block, then canonical BFS numbering.
  std::vector<int> rep(num_blocks, -1);
  for (std::size_t s = 0; s < n; ++s)
    if (rep[static_cast<std::size_t>(block[s])] < 0) rep[static_cast<std::size_t>(block[s])] = static_cast<int>(s);

  std::vector<int> order(num_blocks, -1);
  std::vector<int> queue{block[0]};
  order[static_cast<std::size_t>(block[0])] = 0;
  Dfa dfa;
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const int b = queue[qi];
    const auto s = static_cast<std::size_t>(rep[static_cast<std::size_t>(b)]);
    dfa.accept_.push_back(acc[s]);
    for (int c = 0; c < kAlphabetSize; ++c) {
      const int tb = block[static_cast<std::size_t>(trans[s * num_classes + static_cast<std::size_t>(class_of[static_cast<std::size_t>(c)])])];
      if (order[static_cast<std::size_t>(tb)] < 0) {
        order[static_cast<std::size_t>(tb)] = static_cast<int>(queue.size());
        queue.push_back(tb);
      }
      dfa.next_.push_back(static_cast<std::uint32_t>(order[static_cast<std::size_t>(tb)]));
    }
  }

  for (int s = 0; s < dfa.num_states(); ++s) {
    if (dfa.accepting(s)) continue;
    bool sink = true;
    for (int c = 0; c < kAlphabetSize && sink; ++c)
      sink = dfa.next_[static_cast<std::size_t>(s) * kAlphabetSize + static_cast<std::size_t>(c)] == static_cast<std::uint32_t>(s);
    if (sink) {
      dfa.dead_ = s;
      break;
    }
  }

  dfa.key_.reserve(dfa.accept_.size() * (1 + 2 * kAlphabetSize));
  for (std::size_t s = 0; s < dfa.accept_.size(); ++s) {
    dfa.key_.push_back(static_cast<char>(dfa.accept_[s]));
    for (int c = 0; c < kAlphabetSize; ++c) {
      const std::uint32_t t = dfa.next_[s * kAlphabetSize + static_cast<std::size_t>(c)];
      dfa.key_.push_back(static_cast<char>(t & 0xff));
      dfa.key_.push_back(static_cast<char>((t >> 8) & 0xff));
    }
  }
  return dfa;
}

}  // namespace prax::regex
