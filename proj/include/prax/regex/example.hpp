#pragma once

#include <algorithm>
#include <compare>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace prax {

/// A labelled string: `label` is true when the string must match.
struct Example {
  std::string text;
  bool label = true;

  friend bool operator==(const Example&, const Example&) = default;
  friend auto operator<=>(const Example&, const Example&) = default;
};

inline std::string to_string(const Example& e) { return "(" + e.text + (e.label ? ", +)" : ", -)"); }

class SpecificationError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Ordered examples with no duplicate and no contradictory pair.
class Specification {
 public:
  Specification() = default;
  Specification(std::initializer_list<Example> examples) {
    for (const auto& e : examples) push_back(e);
  }
  explicit Specification(const std::vector<Example>& examples) {
    for (const auto& e : examples) push_back(e);
  }

  /// Appends, throwing SpecificationError on a duplicate or contradiction.
  void push_back(const Example& e) {
    for (const auto& x : examples_) {
      if (x.text == e.text)
        throw SpecificationError(x.label == e.label ? "duplicate example " + to_string(e)
                                                     : "contradictory example " + to_string(e));
    }
    examples_.push_back(e);
  }

  bool contains_text(std::string_view s) const {
    return std::any_of(examples_.begin(), examples_.end(), [&](const Example& x) { return x.text == s; });
  }
  bool contains(const Example& e) const { return std::find(examples_.begin(), examples_.end(), e) != examples_.end(); }

  /// First n examples.
  Specification prefix(std::size_t n) const {
    Specification s;
    s.examples_.assign(examples_.begin(), examples_.begin() + static_cast<std::ptrdiff_t>(std::min(n, examples_.size())));
    return s;
  }

  std::size_t size() const noexcept { return examples_.size(); }
  bool empty() const noexcept { return examples_.empty(); }
  const Example& operator[](std::size_t i) const { return examples_[i]; }
  const Example& back() const { return examples_.back(); }
  auto begin() const noexcept { return examples_.begin(); }
  auto end() const noexcept { return examples_.end(); }
  const std::vector<Example>& examples() const noexcept { return examples_; }

  friend bool operator==(const Specification&, const Specification&) = default;

 private:
  std::vector<Example> examples_;
};

}  // namespace prax
