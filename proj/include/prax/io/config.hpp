#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "prax/bootstrap.hpp"

namespace prax::io {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One TOML value: the subset used by config files.
struct TomlValue {
  std::variant<bool, std::int64_t, double, std::string, std::vector<std::string>> v;
  int line = 0;
};

/// section -> key -> value; top-level keys live in section "".
using TomlTable = std::map<std::string, std::map<std::string, TomlValue>>;

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  return std::string(s.substr(a, b - a));
}

inline std::string toml_escape(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

class LineParser {
 public:
  LineParser(std::string_view s, int line) : s_(s), line_(line) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("line " + std::to_string(line_) + ": " + what);
  }

  void skip_ws() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t' || s_[i_] == '\r')) ++i_;
  }

  bool at_end_or_comment() {
    skip_ws();
    return i_ >= s_.size() || s_[i_] == '#';
  }

  std::string string_value() {
    const char q = s_[i_++];
    std::string out;
    while (i_ < s_.size() && s_[i_] != q) {
      char c = s_[i_++];
      if (q == '"' && c == '\\') {
        if (i_ >= s_.size()) fail("unterminated escape");
        const char e = s_[i_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(std::string("unknown escape \\") + e);
        }
      }
      out += c;
    }
    if (i_ >= s_.size()) fail("unterminated string");
    ++i_;
    return out;
  }

  TomlValue value() {
    skip_ws();
    if (i_ >= s_.size()) fail("missing value");
    TomlValue v;
    v.line = line_;
    const char c = s_[i_];
    if (c == '"' || c == '\'') {
      v.v = string_value();
    } else if (c == '[') {
      ++i_;
      std::vector<std::string> items;
      for (;;) {
        skip_ws();
        if (i_ < s_.size() && s_[i_] == ']') {
          ++i_;
          break;
        }
        if (i_ >= s_.size() || (s_[i_] != '"' && s_[i_] != '\'')) fail("arrays hold strings only");
        items.push_back(string_value());
        skip_ws();
        if (i_ < s_.size() && s_[i_] == ',') ++i_;
        else if (i_ >= s_.size() || s_[i_] != ']') fail("expected , or ] in array");
      }
      v.v = std::move(items);
    } else {
      std::size_t j = i_;
      while (j < s_.size() && s_[j] != ' ' && s_[j] != '\t' && s_[j] != '#' && s_[j] != '\r') ++j;
      std::string tok(s_.substr(i_, j - i_));
      i_ = j;
      std::erase(tok, '_');
      if (tok == "true") v.v = true;
      else if (tok == "false") v.v = false;
      else if (tok.find_first_of(".eE") != std::string::npos && tok.find_first_not_of("+-.eE0123456789") == std::string::npos) {
        std::size_t used = 0;
        double d = 0.0;
        try {
          d = std::stod(tok, &used);
        } catch (const std::exception&) {
          fail("bad number: " + tok);
        }
        if (used != tok.size()) fail("bad number: " + tok);
        v.v = d;
      } else {
        std::size_t used = 0;
        std::int64_t n = 0;
        try {
          n = std::stoll(tok, &used);
        } catch (const std::exception&) {
          fail("bad value: " + tok);
        }
        if (used != tok.size()) fail("bad value: " + tok);
        v.v = n;
      }
    }
    if (!at_end_or_comment()) fail("trailing characters after value");
    return v;
  }

  std::string_view s_;
  std::size_t i_ = 0;
  int line_;
};

}  // namespace detail

inline TomlTable parse_toml(std::string_view text) {
  TomlTable out;
  out[""];
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  for (int line = 1; std::getline(in, raw); ++line) {
    detail::LineParser p(raw, line);
    if (p.at_end_or_comment()) continue;
    if (raw[p.i_] == '[') {
      const auto close = raw.find(']', p.i_);
      if (close == std::string::npos) p.fail("unterminated section header");
      section = detail::trim(std::string_view(raw).substr(p.i_ + 1, close - p.i_ - 1));
      if (section.empty() || section.find_first_of(" .[\"") != std::string::npos) p.fail("bad section name");
      p.i_ = close + 1;
      if (!p.at_end_or_comment()) p.fail("trailing characters after section header");
      if (out.count(section) && !out[section].empty()) p.fail("duplicate section [" + section + "]");
      out[section];
      continue;
    }
    const auto eq = raw.find('=', p.i_);
    if (eq == std::string::npos) p.fail("expected key = value");
    const std::string key = detail::trim(std::string_view(raw).substr(p.i_, eq - p.i_));
    if (key.empty() || key.find_first_not_of("abcdefghijklmnopqrstuvwxyz0123456789_") != std::string::npos)
      p.fail("bad key: " + key);
    p.i_ = eq + 1;
    auto v = p.value();
    if (!out[section].emplace(key, std::move(v)).second) p.fail("duplicate key " + key);
  }
  return out;
}

struct ServeConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // PRAX_PORT overrides
  bool free_play = false;
  bool show_top10 = false;
  int target_max_tokens = 10;
  std::string trace_log = "traces.jsonl";

  friend bool operator==(const ServeConfig&, const ServeConfig&) = default;
};

/// Validation set: exact-RSA descriptions of held-out programs, or a
/// recorded dataset replayed turn by turn.
struct ValidationConfig {
  int programs = 100;
  std::uint64_t seed = 12345;
  std::string universe_literals = "abc";
  int universe_max_tokens = 5;
  int universe_max_length = 5;
  std::string data;  // replay this file instead when set

  friend bool operator==(const ValidationConfig&, const ValidationConfig&) = default;
};

struct Config {
  std::uint64_t seed = 0;
  DomainConfig domain;
  ListenerSettings listener;
  SpeakerSettings speaker;
  LiteralDataConfig base_data;
  TrainConfig base_train;
  BootstrapConfig bootstrap;
  EvalConfig eval;
  int resamples = 1000;
  ValidationConfig validation;
  ServeConfig serve;

  void validate() const {
    domain.validate();
    listener.validate();
    speaker.validate();
    bootstrap.validate();
    eval.validate();
    if (base_data.programs < 1 || base_data.specs_per_program < 1 || base_data.max_spec_len < 0)
      throw ConfigError("models: base data sizes must be positive");
    if (base_train.epochs < 0 || bootstrap.listener_train.epochs < 0) throw ConfigError("epochs must be >= 0");
    if (resamples < 1) throw ConfigError("eval.resamples must be >= 1");
    if (validation.programs < 1) throw ConfigError("validation.programs must be >= 1");
    if (serve.port < 0 || serve.port > 65535) throw ConfigError("serve.port out of range");
  }
};

namespace detail {

inline std::string class_list(const std::vector<CharClass>& cs) {
  std::string out = "[";
  for (std::size_t i = 0; i < cs.size(); ++i) out += (i ? ", " : "") + toml_escape(regex::class_name(cs[i]));
  return out + "]";
}

inline CharClass class_from_name(const std::string& s, int line) {
  for (auto c : regex::kAllClasses)
    if (regex::class_name(c) == s) return c;
  throw ConfigError("line " + std::to_string(line) + ": unknown character class " + s);
}

/// Typed reader that consumes keys and rejects leftovers.
class Reader {
 public:
  explicit Reader(TomlTable t) : t_(std::move(t)) {}

  template <class T>
  void get(const std::string& section, const std::string& key, T& out) {
    auto s = t_.find(section);
    if (s == t_.end()) return;
    auto it = s->second.find(key);
    if (it == s->second.end()) return;
    const TomlValue v = it->second;
    s->second.erase(it);
    const std::string where = "line " + std::to_string(v.line) + ": " + (section.empty() ? "" : section + ".") + key;
    if constexpr (std::is_same_v<T, bool>) {
      if (!std::holds_alternative<bool>(v.v)) throw ConfigError(where + " must be a boolean");
      out = std::get<bool>(v.v);
    } else if constexpr (std::is_integral_v<T>) {
      if (!std::holds_alternative<std::int64_t>(v.v)) throw ConfigError(where + " must be an integer");
      const auto n = std::get<std::int64_t>(v.v);
      if (std::is_unsigned_v<T> && n < 0) throw ConfigError(where + " must be non-negative");
      if (!std::is_unsigned_v<T> && (n < std::numeric_limits<int>::min() || n > std::numeric_limits<int>::max()))
        throw ConfigError(where + " is out of range");
      out = static_cast<T>(n);
    } else if constexpr (std::is_same_v<T, double>) {
      if (std::holds_alternative<std::int64_t>(v.v)) out = static_cast<double>(std::get<std::int64_t>(v.v));
      else if (std::holds_alternative<double>(v.v)) out = std::get<double>(v.v);
      else throw ConfigError(where + " must be a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!std::holds_alternative<std::string>(v.v)) throw ConfigError(where + " must be a string");
      out = std::get<std::string>(v.v);
    } else if constexpr (std::is_same_v<T, std::vector<CharClass>>) {
      if (!std::holds_alternative<std::vector<std::string>>(v.v)) throw ConfigError(where + " must be an array of class names");
      out.clear();
      for (const auto& n : std::get<std::vector<std::string>>(v.v)) out.push_back(class_from_name(n, v.line));
    } else {
      static_assert(sizeof(T) == 0, "unsupported config type");
    }
  }

  void finish() const {
    for (const auto& [section, keys] : t_) {
      if (!section.empty() && !known_section(section)) throw ConfigError("unknown section [" + section + "]");
      for (const auto& [key, v] : keys)
        throw ConfigError("line " + std::to_string(v.line) + ": unknown key " + (section.empty() ? "" : section + ".") + key);
    }
  }

 private:
  static bool known_section(const std::string& s) {
    for (const char* k : {"domain", "sampler", "models", "rsa", "bootstrap", "eval", "validation", "serve"})
      if (s == k) return true;
    return false;
  }
  TomlTable t_;
};

}  // namespace detail

/// Every key is optional; absent keys keep the defaults in c.
inline Config config_from_toml(std::string_view text, Config c = {}) {
  detail::Reader r(parse_toml(text));
  r.get("", "seed", c.seed);

  r.get("domain", "toy_fraction", c.domain.toy_fraction);
  r.get("domain", "toy_literals", c.domain.toy.literals);
  r.get("domain", "toy_quantifiers", c.domain.toy.quantifiers);
  r.get("domain", "toy_max_tokens", c.domain.toy.max_tokens);

  auto& s = c.domain.medium;
  r.get("sampler", "max_tokens", s.max_tokens);
  r.get("sampler", "max_concat_depth", s.max_concat_depth);
  r.get("sampler", "concat_weight", s.concat_weight);
  r.get("sampler", "separation_weight", s.separation_weight);
  r.get("sampler", "literals", s.literals);
  r.get("sampler", "classes", s.classes);
  r.get("sampler", "delimiters", s.delimiters);
  r.get("sampler", "max_repeat", s.max_repeat);

  auto& l = c.listener;
  r.get("models", "listener_literals", l.literals);
  r.get("models", "listener_classes", l.classes);
  r.get("models", "listener_max_tokens", l.max_tokens);
  r.get("models", "listener_max_arity", l.max_arity);
  r.get("models", "listener_max_repeat", l.max_repeat);
  r.get("models", "listener_max_depth", l.max_depth);
  r.get("models", "speaker_alphabet", c.speaker.space.alphabet);
  r.get("models", "speaker_max_length", c.speaker.space.max_length);
  r.get("models", "speaker_pool_factor", c.speaker.pool_factor);
  r.get("models", "speaker_contrast_size", c.speaker.contrast_size);
  r.get("models", "base_programs", c.base_data.programs);
  r.get("models", "base_specs_per_program", c.base_data.specs_per_program);
  r.get("models", "base_max_spec_len", c.base_data.max_spec_len);
  r.get("models", "base_epochs", c.base_train.epochs);
  r.get("models", "base_lr", c.base_train.lr);
  r.get("models", "train_seed", c.base_train.seed);

  r.get("rsa", "n_per_model", c.bootstrap.rsa.n_per_model);
  r.get("rsa", "n_examples_max", c.bootstrap.rsa.n_examples_max);
  r.get("rsa", "include_base_models", c.bootstrap.rsa.include_base_models);

  r.get("bootstrap", "r_max", c.bootstrap.r_max);
  r.get("bootstrap", "k", c.bootstrap.k);
  r.get("bootstrap", "epochs", c.bootstrap.listener_train.epochs);
  r.get("bootstrap", "lr", c.bootstrap.listener_train.lr);
  r.get("bootstrap", "prefixes", c.bootstrap.listener_train.prefixes);
  r.get("bootstrap", "selection_metric", c.bootstrap.selection_metric);

  r.get("eval", "n_samples", c.eval.n_samples);
  r.get("eval", "top_k", c.eval.top_k);
  r.get("eval", "max_turns", c.eval.max_turns);
  r.get("eval", "resamples", c.resamples);

  r.get("validation", "programs", c.validation.programs);
  r.get("validation", "seed", c.validation.seed);
  r.get("validation", "universe_literals", c.validation.universe_literals);
  r.get("validation", "universe_max_tokens", c.validation.universe_max_tokens);
  r.get("validation", "universe_max_length", c.validation.universe_max_length);
  r.get("validation", "data", c.validation.data);

  r.get("serve", "host", c.serve.host);
  r.get("serve", "port", c.serve.port);
  r.get("serve", "free_play", c.serve.free_play);
  r.get("serve", "show_top10", c.serve.show_top10);
  r.get("serve", "target_max_tokens", c.serve.target_max_tokens);
  r.get("serve", "trace_log", c.serve.trace_log);
  r.finish();

  // One optimizer setting for both bootstrap models; training seeds are fixed.
  c.base_train.prefixes = false;
  c.bootstrap.listener_train.seed = c.base_train.seed;
  c.bootstrap.speaker_train = c.bootstrap.listener_train;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return config_from_toml(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

/// Canonical TOML form; config_from_toml(to_toml(c)) == c.
inline std::string to_toml(const Config& c) {
  using detail::toml_escape;
  std::ostringstream o;
  auto num = [](double d) {
    char buf[32];
    const auto end = std::to_chars(buf, buf + sizeof buf, d).ptr;
    std::string t(buf, end);
    if (t.find_first_of(".eEn") == std::string::npos) t += ".0";
    return t;
  };
  auto b = [](bool x) { return x ? "true" : "false"; };
  o << "seed = " << c.seed << "\n\n";
  o << "[domain]\n"
    << "toy_fraction = " << num(c.domain.toy_fraction) << "\n"
    << "toy_literals = " << toml_escape(c.domain.toy.literals) << "\n"
    << "toy_quantifiers = " << toml_escape(c.domain.toy.quantifiers) << "\n"
    << "toy_max_tokens = " << c.domain.toy.max_tokens << "\n\n";
  const auto& s = c.domain.medium;
  o << "[sampler]\n"
    << "max_tokens = " << s.max_tokens << "\n"
    << "max_concat_depth = " << s.max_concat_depth << "\n"
    << "concat_weight = " << num(s.concat_weight) << "\n"
    << "separation_weight = " << num(s.separation_weight) << "\n"
    << "literals = " << toml_escape(s.literals) << "\n"
    << "classes = " << detail::class_list(s.classes) << "\n"
    << "delimiters = " << toml_escape(s.delimiters) << "\n"
    << "max_repeat = " << s.max_repeat << "\n\n";
  const auto& l = c.listener;
  o << "[models]\n"
    << "listener_literals = " << toml_escape(l.literals) << "\n"
    << "listener_classes = " << detail::class_list(l.classes) << "\n"
    << "listener_max_tokens = " << l.max_tokens << "\n"
    << "listener_max_arity = " << l.max_arity << "\n"
    << "listener_max_repeat = " << l.max_repeat << "\n"
    << "listener_max_depth = " << l.max_depth << "\n"
    << "speaker_alphabet = " << toml_escape(c.speaker.space.alphabet) << "\n"
    << "speaker_max_length = " << c.speaker.space.max_length << "\n"
    << "speaker_pool_factor = " << c.speaker.pool_factor << "\n"
    << "speaker_contrast_size = " << c.speaker.contrast_size << "\n"
    << "base_programs = " << c.base_data.programs << "\n"
    << "base_specs_per_program = " << c.base_data.specs_per_program << "\n"
    << "base_max_spec_len = " << c.base_data.max_spec_len << "\n"
    << "base_epochs = " << c.base_train.epochs << "\n"
    << "base_lr = " << num(c.base_train.lr) << "\n"
    << "train_seed = " << c.base_train.seed << "\n\n";
  o << "[rsa]\n"
    << "n_per_model = " << c.bootstrap.rsa.n_per_model << "\n"
    << "n_examples_max = " << c.bootstrap.rsa.n_examples_max << "\n"
    << "include_base_models = " << b(c.bootstrap.rsa.include_base_models) << "\n\n";
  o << "[bootstrap]\n"
    << "r_max = " << c.bootstrap.r_max << "\n"
    << "k = " << c.bootstrap.k << "\n"
    << "epochs = " << c.bootstrap.listener_train.epochs << "\n"
    << "lr = " << num(c.bootstrap.listener_train.lr) << "\n"
    << "prefixes = " << b(c.bootstrap.listener_train.prefixes) << "\n"
    << "selection_metric = " << toml_escape(c.bootstrap.selection_metric) << "\n\n";
  o << "[eval]\n"
    << "n_samples = " << c.eval.n_samples << "\n"
    << "top_k = " << c.eval.top_k << "\n"
    << "max_turns = " << c.eval.max_turns << "\n"
    << "resamples = " << c.resamples << "\n\n";
  o << "[validation]\n"
    << "programs = " << c.validation.programs << "\n"
    << "seed = " << c.validation.seed << "\n"
    << "universe_literals = " << toml_escape(c.validation.universe_literals) << "\n"
    << "universe_max_tokens = " << c.validation.universe_max_tokens << "\n"
    << "universe_max_length = " << c.validation.universe_max_length << "\n"
    << "data = " << toml_escape(c.validation.data) << "\n\n";
  o << "[serve]\n"
    << "host = " << toml_escape(c.serve.host) << "\n"
    << "port = " << c.serve.port << "\n"
    << "free_play = " << b(c.serve.free_play) << "\n"
    << "show_top10 = " << b(c.serve.show_top10) << "\n"
    << "target_max_tokens = " << c.serve.target_max_tokens << "\n"
    << "trace_log = " << toml_escape(c.serve.trace_log) << "\n";
  return o.str();
}

/// Stable hash of the canonical form, written into checkpoints.
inline std::string config_hash(const Config& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(stable_hash(to_toml(c))));
  return buf;
}

}  // namespace prax::io
