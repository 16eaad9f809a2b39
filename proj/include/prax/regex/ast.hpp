#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "prax/regex/charset.hpp"

namespace prax::regex {

enum class TokenKind : unsigned char { Literal, Class, Quantifier, Bar, GroupOpen, GroupClose };

enum class QuantKind : unsigned char { Star, Plus, Opt, Repeat };

struct Token {
  TokenKind kind = TokenKind::Literal;
  char ch = 0;                       // Literal
  CharClass cls = CharClass::Any;    // Class
  QuantKind quant = QuantKind::Star; // Quantifier
  int lo = 0, hi = 0;                // Quantifier::Repeat, 1 <= lo <= hi <= 9

  friend bool operator==(const Token& a, const Token& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
      case TokenKind::Literal: return a.ch == b.ch;
      case TokenKind::Class: return a.cls == b.cls;
      case TokenKind::Quantifier:
        return a.quant == b.quant && (a.quant != QuantKind::Repeat || (a.lo == b.lo && a.hi == b.hi));
      default: return true;
    }
  }
};

inline constexpr int kMaxRepeat = 9;

enum class NodeKind : unsigned char { Literal, Class, Concat, Alt, Star, Plus, Opt, Repeat };

constexpr bool is_quantifier(NodeKind k) noexcept {
  return k == NodeKind::Star || k == NodeKind::Plus || k == NodeKind::Opt || k == NodeKind::Repeat;
}

/// Normalized regex tree.  Concat and Alt have at least two children and
/// never directly contain a node of their own kind.  Parentheses are syntax
/// only; they do not appear in the tree.
struct Node {
  NodeKind kind = NodeKind::Literal;
  char ch = 0;
  CharClass cls = CharClass::Any;
  int lo = 0, hi = 0;
  std::vector<Node> children;

  static Node literal(char c) {
    Node n;
    n.kind = NodeKind::Literal;
    n.ch = c;
    return n;
  }
  static Node char_class(CharClass c) {
    Node n;
    n.kind = NodeKind::Class;
    n.cls = c;
    return n;
  }
  static Node unary(NodeKind k, Node child, int lo = 0, int hi = 0) {
    Node n;
    n.kind = k;
    n.lo = lo;
    n.hi = hi;
    n.children.push_back(std::move(child));
    return n;
  }
  static Node repeat(Node child, int lo, int hi) { return unary(NodeKind::Repeat, std::move(child), lo, hi); }

  /// Concat/Alt with flattening; a single part is returned unchanged.
  static Node nary(NodeKind k, std::vector<Node> parts) {
    if (parts.size() == 1) return std::move(parts.front());
    Node n;
    n.kind = k;
    for (auto& p : parts) {
      if (p.kind == k) {
        for (auto& c : p.children) n.children.push_back(std::move(c));
      } else {
        n.children.push_back(std::move(p));
      }
    }
    return n;
  }

  const Node& child() const { return children.front(); }

  friend bool operator==(const Node& a, const Node& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
      case NodeKind::Literal: return a.ch == b.ch;
      case NodeKind::Class: return a.cls == b.cls;
      case NodeKind::Repeat:
        if (a.lo != b.lo || a.hi != b.hi) return false;
        break;
      default: break;
    }
    return a.children == b.children;
  }
};

namespace detail {

enum class RenderCtx { Top, ConcatChild, QuantChild };

inline void append_literal(std::string& out, char c) {
  if (is_meta(c)) out.push_back('\\');
  out.push_back(c);
}

inline void render_into(const Node& n, RenderCtx ctx, std::string& out) {
  switch (n.kind) {
    case NodeKind::Literal: append_literal(out, n.ch); return;
    case NodeKind::Class: out += class_surface(n.cls); return;
    case NodeKind::Concat: {
      const bool wrap = ctx == RenderCtx::QuantChild;
      if (wrap) out.push_back('(');
      for (const auto& c : n.children) render_into(c, RenderCtx::ConcatChild, out);
      if (wrap) out.push_back(')');
      return;
    }
    case NodeKind::Alt: {
      const bool wrap = ctx != RenderCtx::Top;
      if (wrap) out.push_back('(');
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i) out.push_back('|');
        render_into(n.children[i], RenderCtx::Top, out);
      }
      if (wrap) out.push_back(')');
      return;
    }
    default: break;
  }
  // quantifiers
  const bool wrap = ctx == RenderCtx::QuantChild;
  if (wrap) out.push_back('(');
  render_into(n.child(), RenderCtx::QuantChild, out);
  switch (n.kind) {
    case NodeKind::Star: out.push_back('*'); break;
    case NodeKind::Plus: out.push_back('+'); break;
    case NodeKind::Opt: out.push_back('?'); break;
    default:
      out.push_back('{');
      out.push_back(static_cast<char>('0' + n.lo));
      if (n.hi != n.lo) {
        out.push_back(',');
        out.push_back(static_cast<char>('0' + n.hi));
      }
      out.push_back('}');
  }
  if (wrap) out.push_back(')');
}

}  // namespace detail

/// Canonical DSL text: minimal parentheses, escapes only where required.
inline std::string render(const Node& n) {
  std::string out;
  detail::render_into(n, detail::RenderCtx::Top, out);
  return out;
}

inline std::size_t node_count(const Node& n) {
  std::size_t k = 1;
  for (const auto& c : n.children) k += node_count(c);
  return k;
}

/// Chars that can occur in some string of the node's language (ignoring emptiness).
inline CharSet node_chars(const Node& n) {
  switch (n.kind) {
    case NodeKind::Literal: return single_char(n.ch);
    case NodeKind::Class: return class_chars(n.cls);
    default: {
      CharSet s;
      for (const auto& c : n.children) s |= node_chars(c);
      return s;
    }
  }
}

/// Length of the shortest string in the node's language.
inline int min_length(const Node& n) {
  switch (n.kind) {
    case NodeKind::Literal:
    case NodeKind::Class: return 1;
    case NodeKind::Concat: {
      int k = 0;
      for (const auto& c : n.children) k += min_length(c);
      return k;
    }
    case NodeKind::Alt: {
      int k = min_length(n.children.front());
      for (const auto& c : n.children) k = std::min(k, min_length(c));
      return k;
    }
    case NodeKind::Star:
    case NodeKind::Opt: return 0;
    case NodeKind::Plus: return min_length(n.child());
    case NodeKind::Repeat: return n.lo * min_length(n.child());
  }
  return 0;
}

}  // namespace prax::regex
