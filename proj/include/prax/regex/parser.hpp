#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "prax/regex/ast.hpp"

namespace prax::regex {

class RegexError : public std::runtime_error {
 public:
  RegexError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Malformed DSL text.
class SyntaxError : public RegexError {
  using RegexError::RegexError;
};

/// Well-formed in a larger regex dialect, but outside this DSL
/// (intersection, lookaround, anchors, bracket sets, backreferences).
class UnsupportedConstruct : public RegexError {
  using RegexError::RegexError;
};

struct LexedToken {
  Token token;
  std::size_t offset = 0;
};

inline std::vector<LexedToken> tokenize(std::string_view text) {
  std::vector<LexedToken> out;
  std::size_t i = 0;
  auto digit_at = [&](std::size_t j) -> int {
    if (j < text.size() && text[j] >= '0' && text[j] <= '9') return text[j] - '0';
    return -1;
  };
  while (i < text.size()) {
    const char c = text[i];
    LexedToken lt;
    lt.offset = i;
    Token& t = lt.token;
    if (!in_alphabet(c)) throw SyntaxError("non-printable character", i);
    switch (c) {
      case '\\': {
        if (i + 1 >= text.size()) throw SyntaxError("dangling escape", i);
        const char e = text[i + 1];
        if (auto cls = class_from_escape(e)) {
          t.kind = TokenKind::Class;
          t.cls = *cls;
        } else if (is_meta(e)) {
          t.kind = TokenKind::Literal;
          t.ch = e;
        } else if (e >= '0' && e <= '9') {
          throw UnsupportedConstruct("backreference", i);
        } else {
          throw SyntaxError(std::string("unknown escape \\") + e, i);
        }
        i += 2;
        break;
      }
      case '.':
        t.kind = TokenKind::Class;
        t.cls = CharClass::Any;
        ++i;
        break;
      case '*':
      case '+':
      case '?':
        t.kind = TokenKind::Quantifier;
        t.quant = c == '*' ? QuantKind::Star : c == '+' ? QuantKind::Plus : QuantKind::Opt;
        ++i;
        break;
      case '{': {
        const int lo = digit_at(i + 1);
        if (lo < 1) throw SyntaxError("repeat bound must be a digit 1-9", i);
        int hi = lo;
        std::size_t j = i + 2;
        if (j < text.size() && text[j] == ',') {
          hi = digit_at(j + 1);
          if (hi < 1) throw SyntaxError("repeat upper bound must be a digit 1-9", i);
          j += 2;
        }
        if (j >= text.size() || text[j] != '}') throw SyntaxError("unterminated repeat", i);
        if (hi < lo) throw SyntaxError("repeat bounds out of order", i);
        t.kind = TokenKind::Quantifier;
        t.quant = QuantKind::Repeat;
        t.lo = lo;
        t.hi = hi;
        i = j + 1;
        break;
      }
      case '|':
        t.kind = TokenKind::Bar;
        ++i;
        break;
      case '(':
        if (i + 1 < text.size() && text[i + 1] == '?') throw UnsupportedConstruct("lookaround or inline group flags", i);
        t.kind = TokenKind::GroupOpen;
        ++i;
        break;
      case ')':
        t.kind = TokenKind::GroupClose;
        ++i;
        break;
      case '&': throw UnsupportedConstruct("intersection", i);
      case '^':
      case '$': throw UnsupportedConstruct("anchor (matching is always anchored)", i);
      case '[':
      case ']': throw UnsupportedConstruct("bracket character set", i);
      case '}': throw SyntaxError("unmatched '}'", i);
      default:
        t.kind = TokenKind::Literal;
        t.ch = c;
        ++i;
    }
    out.push_back(lt);
  }
  return out;
}

namespace detail {

class Parser {
 public:
  Parser(std::vector<LexedToken> toks, std::size_t end) : toks_(std::move(toks)), end_(end) {}

  Node parse() {
    Node n = alternation();
    if (pos_ < toks_.size()) throw SyntaxError("unexpected ')'", toks_[pos_].offset);
    return n;
  }

 private:
  std::size_t offset() const { return pos_ < toks_.size() ? toks_[pos_].offset : end_; }
  const Token* peek() const { return pos_ < toks_.size() ? &toks_[pos_].token : nullptr; }

  Node alternation() {
    std::vector<Node> branches;
    branches.push_back(concatenation());
    while (peek() && peek()->kind == TokenKind::Bar) {
      ++pos_;
      branches.push_back(concatenation());
    }
    return Node::nary(NodeKind::Alt, std::move(branches));
  }

  Node concatenation() {
    std::vector<Node> items;
    while (const Token* t = peek()) {
      if (t->kind == TokenKind::Bar || t->kind == TokenKind::GroupClose) break;
      items.push_back(postfix());
    }
    if (items.empty()) throw SyntaxError("empty expression", offset());
    return Node::nary(NodeKind::Concat, std::move(items));
  }

  Node postfix() {
    Node n = atom();
    if (const Token* t = peek(); t && t->kind == TokenKind::Quantifier) {
      ++pos_;
      switch (t->quant) {
        case QuantKind::Star: n = Node::unary(NodeKind::Star, std::move(n)); break;
        case QuantKind::Plus: n = Node::unary(NodeKind::Plus, std::move(n)); break;
        case QuantKind::Opt: n = Node::unary(NodeKind::Opt, std::move(n)); break;
        case QuantKind::Repeat: n = Node::repeat(std::move(n), t->lo, t->hi); break;
      }
      if (const Token* u = peek(); u && u->kind == TokenKind::Quantifier)
        throw SyntaxError("stacked quantifier (use parentheses)", offset());
    }
    return n;
  }

  Node atom() {
    const Token* t = peek();
    const std::size_t at = offset();
    if (!t) throw SyntaxError("unexpected end of pattern", at);
    switch (t->kind) {
      case TokenKind::Literal: ++pos_; return Node::literal(t->ch);
      case TokenKind::Class: ++pos_; return Node::char_class(t->cls);
      case TokenKind::GroupOpen: {
        ++pos_;
        Node inner = alternation();
        const Token* close = peek();
        if (!close || close->kind != TokenKind::GroupClose) throw SyntaxError("unbalanced '('", at);
        ++pos_;
        return inner;
      }
      case TokenKind::Quantifier: throw SyntaxError("quantifier without operand", at);
      default: throw SyntaxError("unexpected token", at);
    }
  }

  std::vector<LexedToken> toks_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses DSL text into a normalized tree.
inline Node parse_ast(std::string_view text) {
  if (text.empty()) throw SyntaxError("empty pattern", 0);
  return detail::Parser(tokenize(text), text.size()).parse();
}

inline std::vector<Token> tokens_of(std::string_view canonical_text) {
  std::vector<Token> out;
  for (auto& lt : tokenize(canonical_text)) out.push_back(lt.token);
  return out;
}

}  // namespace prax::regex
