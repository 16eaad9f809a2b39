#pragma once

#include <array>
#include <bitset>
#include <optional>
#include <string>
#include <string_view>

namespace prax::regex {

// Example alphabet: printable ASCII, space through tilde.
inline constexpr char kFirstChar = 32;
inline constexpr char kLastChar = 126;
inline constexpr int kAlphabetSize = kLastChar - kFirstChar + 1;

constexpr bool in_alphabet(char c) noexcept { return c >= kFirstChar && c <= kLastChar; }

using CharSet = std::bitset<128>;

enum class CharClass : unsigned char { Digit, Lower, Upper, Letter, Alnum, Space, Any };

inline constexpr std::array<CharClass, 7> kAllClasses = {
    CharClass::Digit, CharClass::Lower, CharClass::Upper, CharClass::Letter,
    CharClass::Alnum, CharClass::Space, CharClass::Any};

inline bool class_contains(CharClass cls, char c) noexcept {
  if (!in_alphabet(c)) return false;
  const bool digit = c >= '0' && c <= '9';
  const bool lower = c >= 'a' && c <= 'z';
  const bool upper = c >= 'A' && c <= 'Z';
  switch (cls) {
    case CharClass::Digit: return digit;
    case CharClass::Lower: return lower;
    case CharClass::Upper: return upper;
    case CharClass::Letter: return lower || upper;
    case CharClass::Alnum: return lower || upper || digit;
    case CharClass::Space: return c == ' ';
    case CharClass::Any: return true;
  }
  return false;
}

inline CharSet class_chars(CharClass cls) {
  CharSet s;
  for (int c = kFirstChar; c <= kLastChar; ++c)
    if (class_contains(cls, static_cast<char>(c))) s.set(static_cast<std::size_t>(c));
  return s;
}

inline CharSet single_char(char c) {
  CharSet s;
  if (in_alphabet(c)) s.set(static_cast<unsigned char>(c));
  return s;
}

inline CharSet chars_of(std::string_view text) {
  CharSet s;
  for (char c : text)
    if (in_alphabet(c)) s.set(static_cast<unsigned char>(c));
  return s;
}

/// DSL surface of a class: `\d \l \u \a \w \s .`
inline std::string_view class_surface(CharClass cls) noexcept {
  switch (cls) {
    case CharClass::Digit: return "\\d";
    case CharClass::Lower: return "\\l";
    case CharClass::Upper: return "\\u";
    case CharClass::Letter: return "\\a";
    case CharClass::Alnum: return "\\w";
    case CharClass::Space: return "\\s";
    case CharClass::Any: return ".";
  }
  return "?";
}

inline std::string_view class_name(CharClass cls) noexcept {
  switch (cls) {
    case CharClass::Digit: return "digit";
    case CharClass::Lower: return "lower";
    case CharClass::Upper: return "upper";
    case CharClass::Letter: return "letter";
    case CharClass::Alnum: return "alnum";
    case CharClass::Space: return "space";
    case CharClass::Any: return "any";
  }
  return "?";
}

/// Class for the letter following a backslash, if it names one.
inline std::optional<CharClass> class_from_escape(char c) noexcept {
  switch (c) {
    case 'd': return CharClass::Digit;
    case 'l': return CharClass::Lower;
    case 'u': return CharClass::Upper;
    case 'a': return CharClass::Letter;
    case 'w': return CharClass::Alnum;
    case 's': return CharClass::Space;
    default: return std::nullopt;
  }
}

/// Characters that must be escaped to be literals.
inline constexpr std::string_view kMetaChars = "\\()|*+?{}.[]&^$";

constexpr bool is_meta(char c) noexcept { return kMetaChars.find(c) != std::string_view::npos; }

}  // namespace prax::regex
