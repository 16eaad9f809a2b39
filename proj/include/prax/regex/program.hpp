#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "prax/regex/ast.hpp"
#include "prax/regex/dfa.hpp"
#include "prax/regex/parser.hpp"

namespace prax::regex {

/// Immutable regex program: canonical text, token sequence, tree, and a
/// lazily compiled minimal DFA shared by all copies.
class RegexProgram {
 public:
  RegexProgram() : RegexProgram(Node::literal('a')) {}

  explicit RegexProgram(Node ast) : data_(std::make_shared<Data>()) {
    data_->text = render(ast);
    data_->tokens = tokens_of(data_->text);
    data_->ast = std::move(ast);
  }

  /// Throws SyntaxError or UnsupportedConstruct.
  static RegexProgram parse(std::string_view text) { return RegexProgram(parse_ast(text)); }

  const std::string& text() const noexcept { return data_->text; }
  const std::vector<Token>& tokens() const noexcept { return data_->tokens; }
  std::size_t size() const noexcept { return data_->tokens.size(); }
  const Node& ast() const noexcept { return data_->ast; }

  /// Compiled on first use; safe under concurrent first access.
  const Dfa& dfa() const {
    std::call_once(data_->once, [d = data_.get()] { d->dfa = std::make_unique<Dfa>(Dfa::compile(d->ast)); });
    return *data_->dfa;
  }

  bool matches(std::string_view s) const { return dfa().matches(s); }

  /// Surface equality (canonical text).
  friend bool operator==(const RegexProgram& a, const RegexProgram& b) noexcept {
    return a.data_ == b.data_ || a.data_->text == b.data_->text;
  }
  friend auto operator<=>(const RegexProgram& a, const RegexProgram& b) noexcept { return a.text() <=> b.text(); }

 private:
  struct Data {
    std::string text;
    std::vector<Token> tokens;
    Node ast;
    std::once_flag once;
    std::unique_ptr<Dfa> dfa;
  };
  std::shared_ptr<Data> data_;
};

inline bool matches(const RegexProgram& program, std::string_view s) { return program.matches(s); }

/// Language equality via minimal-DFA identity.
inline bool semantically_equal(const RegexProgram& a, const RegexProgram& b) {
  return a == b || a.dfa() == b.dfa();
}

}  // namespace prax::regex
