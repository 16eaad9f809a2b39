#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "prax/eval.hpp"
#include "prax/models.hpp"

namespace prax::io {

using json = nlohmann::json;

inline constexpr const char* kCheckpointFormat = "prax.checkpoint/1";
inline constexpr const char* kTraceSchema = "prax.trace/1";
inline constexpr const char* kReportSchema = "prax.report/1";

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a temporary file and a rename, so readers never see a
/// partial file.
inline void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path.string());
    out << contents;
    if (!out.flush()) throw FormatError("write failed for " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void append_line(const std::filesystem::path& path, std::string_view line) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw FormatError("cannot append to " + path.string());
  out << line << '\n';
  out.flush();
}

// ---- specifications and datasets --------------------------------------

inline json to_json(const Example& e) { return json::array({e.text, e.label}); }

inline Example example_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_string() || !j[1].is_boolean())
    throw FormatError("an example is [string, bool]");
  return {j[0].get<std::string>(), j[1].get<bool>()};
}

inline json to_json(const Specification& s) {
  json out = json::array();
  for (const auto& e : s) out.push_back(to_json(e));
  return out;
}

inline Specification spec_from_json(const json& j) {
  if (!j.is_array()) throw FormatError("a spec is an array of examples");
  Specification s;
  try {
    for (const auto& e : j) s.push_back(example_from_json(e));
  } catch (const SpecificationError& e) {
    throw FormatError(e.what());
  }
  return s;
}

inline RegexProgram program_from_json(const json& j) {
  if (!j.is_string()) throw FormatError("a program is a string");
  try {
    return RegexProgram::parse(j.get<std::string>());
  } catch (const std::exception& e) {
    throw FormatError("bad program " + j.get<std::string>() + ": " + e.what());
  }
}

inline json to_json(const DatasetEntry& d) {
  json meta = {{"source", d.source}};
  if (d.round) meta["round"] = *d.round;
  return {{"program", d.program.text()}, {"spec", to_json(d.spec)}, {"meta", meta}};
}

/// Parses and checks one record; inconsistent records are errors.
inline DatasetEntry dataset_entry_from_json(const json& j) {
  if (!j.is_object() || !j.contains("program") || !j.contains("spec")) throw FormatError("a record needs program and spec");
  DatasetEntry d{program_from_json(j["program"]), spec_from_json(j["spec"]), "literal", std::nullopt};
  if (j.contains("meta")) {
    const auto& m = j["meta"];
    if (!m.is_object()) throw FormatError("meta must be an object");
    if (m.contains("source")) d.source = m["source"].get<std::string>();
    if (m.contains("round") && !m["round"].is_null()) d.round = m["round"].get<int>();
  }
  if (!is_consistent(d.program, d.spec)) throw FormatError("spec is inconsistent with " + d.program.text());
  return d;
}

inline std::string dataset_to_jsonl(const Dataset& data) {
  std::string out;
  for (const auto& d : data) out += to_json(d).dump() + "\n";
  return out;
}

inline Dataset dataset_from_jsonl(std::string_view text, const std::string& name = "dataset") {
  Dataset out;
  std::istringstream in{std::string(text)};
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(dataset_entry_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw FormatError(name + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

inline void save_dataset(const std::filesystem::path& path, const Dataset& data) { write_file(path, dataset_to_jsonl(data)); }

inline Dataset load_dataset(const std::filesystem::path& path) { return dataset_from_jsonl(read_file(path), path.string()); }

// ---- checkpoints --------------------------------------------------------

struct CheckpointMeta {
  int version = 0;
  std::optional<int> round;  // round whose data produced it; none for base
  std::uint64_t seed = 0;
  std::string config_hash;

  friend bool operator==(const CheckpointMeta&, const CheckpointMeta&) = default;
};

namespace detail {

inline json class_names(const std::vector<CharClass>& cs) {
  json out = json::array();
  for (auto c : cs) out.push_back(std::string(regex::class_name(c)));
  return out;
}

inline std::vector<CharClass> classes_from_json(const json& j) {
  std::vector<CharClass> out;
  for (const auto& n : j) {
    bool found = false;
    for (auto c : regex::kAllClasses)
      if (regex::class_name(c) == n.get<std::string>()) {
        out.push_back(c);
        found = true;
      }
    if (!found) throw FormatError("unknown class " + n.dump());
  }
  return out;
}

inline json meta_json(const char* kind, const CheckpointMeta& m) {
  return {{"format", kCheckpointFormat},
          {"kind", kind},
          {"version", m.version},
          {"round", m.round ? json(*m.round) : json(nullptr)},
          {"seed", m.seed},
          {"config_hash", m.config_hash}};
}

inline CheckpointMeta check_meta(const json& j, const char* kind) {
  if (!j.is_object() || j.value("format", "") != kCheckpointFormat) throw FormatError("not a prax checkpoint");
  if (j.value("kind", "") != kind) throw FormatError(std::string("expected a ") + kind + " checkpoint, found " + j.value("kind", "?"));
  CheckpointMeta m;
  m.version = j.at("version").get<int>();
  if (!j.at("round").is_null()) m.round = j["round"].get<int>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.config_hash = j.at("config_hash").get<std::string>();
  return m;
}

inline std::vector<double> weights_by_name(const json& w, const std::vector<std::string>& names) {
  if (!w.is_object() || w.size() != names.size()) throw FormatError("checkpoint weight table does not match the model layout");
  std::vector<double> out;
  out.reserve(names.size());
  for (const auto& n : names) {
    auto it = w.find(n);
    if (it == w.end() || !it->is_number()) throw FormatError("checkpoint lacks weight " + n);
    out.push_back(it->get<double>());
  }
  return out;
}

}  // namespace detail

inline json to_json(const ListenerSettings& s) {
  return {{"literals", s.literals},   {"classes", detail::class_names(s.classes)}, {"max_tokens", s.max_tokens},
          {"max_arity", s.max_arity}, {"max_repeat", s.max_repeat},               {"max_depth", s.max_depth}};
}

inline ListenerSettings listener_settings_from_json(const json& j) {
  ListenerSettings s;
  s.literals = j.at("literals").get<std::string>();
  s.classes = detail::classes_from_json(j.at("classes"));
  s.max_tokens = j.at("max_tokens").get<int>();
  s.max_arity = j.at("max_arity").get<int>();
  s.max_repeat = j.at("max_repeat").get<int>();
  s.max_depth = j.at("max_depth").get<int>();
  s.validate();
  return s;
}

inline json to_json(const SpeakerSettings& s) {
  return {{"alphabet", s.space.alphabet},
          {"max_length", s.space.max_length},
          {"pool_factor", s.pool_factor},
          {"contrast_size", s.contrast_size}};
}

inline SpeakerSettings speaker_settings_from_json(const json& j) {
  SpeakerSettings s;
  s.space.alphabet = j.at("alphabet").get<std::string>();
  s.space.max_length = j.at("max_length").get<int>();
  s.pool_factor = j.at("pool_factor").get<int>();
  s.contrast_size = j.at("contrast_size").get<int>();
  s.validate();
  return s;
}

inline json checkpoint_json(const ListenerSnapshot& s, CheckpointMeta m) {
  m.version = s.version();
  json j = detail::meta_json("listener", m);
  j["settings"] = to_json(s.settings());
  json w = json::object();
  const auto names = s.grammar().layout().names();
  for (std::size_t i = 0; i < names.size(); ++i) w[names[i]] = s.weights()[i];
  j["weights"] = std::move(w);
  return j;
}

inline json checkpoint_json(const SpeakerSnapshot& s, CheckpointMeta m) {
  m.version = s.version();
  json j = detail::meta_json("speaker", m);
  j["settings"] = to_json(s.settings());
  j["polarity_bias"] = s.polarity_bias();
  json w = json::object();
  for (const auto& [name, v] : s.example_feature_weights()) w[name] = v;
  j["weights"] = std::move(w);
  return j;
}

template <class Snapshot>
struct Checkpoint {
  Snapshot snapshot;
  CheckpointMeta meta;
};

inline Checkpoint<ListenerSnapshot> listener_from_json(const json& j) {
  try {
    auto meta = detail::check_meta(j, "listener");
    const auto settings = listener_settings_from_json(j.at("settings"));
    const ListenerSnapshot shape(settings);
    auto w = detail::weights_by_name(j.at("weights"), shape.grammar().layout().names());
    return {ListenerSnapshot(settings, std::move(w), meta.version), meta};
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed listener checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid listener checkpoint: ") + e.what());
  }
}

inline Checkpoint<SpeakerSnapshot> speaker_from_json(const json& j) {
  try {
    auto meta = detail::check_meta(j, "speaker");
    const auto settings = speaker_settings_from_json(j.at("settings"));
    auto w = detail::weights_by_name(j.at("weights"), models::speaker_features().layout().names());
    return {SpeakerSnapshot(settings, std::move(w), j.at("polarity_bias").get<double>(), meta.version), meta};
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed speaker checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid speaker checkpoint: ") + e.what());
  }
}

template <class Snapshot>
void save_checkpoint(const std::filesystem::path& path, const Snapshot& s, const CheckpointMeta& m) {
  write_file(path, checkpoint_json(s, m).dump(2) + "\n");
}

inline Checkpoint<ListenerSnapshot> load_listener(const std::filesystem::path& path) {
  try {
    return listener_from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline Checkpoint<SpeakerSnapshot> load_speaker(const std::filesystem::path& path) {
  try {
    return speaker_from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// ---- traces -------------------------------------------------------------

inline json to_json(const InteractionTrace& t) {
  json turns = json::array();
  for (const auto& turn : t.turns) {
    json guesses = json::array();
    for (const auto& g : turn.guesses) guesses.push_back(json::array({g.program.text(), g.log_score}));
    turns.push_back({{"example", to_json(turn.example)}, {"guesses", std::move(guesses)}});
  }
  return {{"schema", kTraceSchema},
          {"target", t.target.text()},
          {"source", to_string(t.source)},
          {"seed", t.seed},
          {"success_turn", t.success_turn ? json(*t.success_turn) : json(nullptr)},
          {"turns", std::move(turns)}};
}

inline InteractionTrace trace_from_json(const json& j) {
  try {
    if (j.value("schema", "") != kTraceSchema) throw FormatError("not a prax trace");
    InteractionTrace t{program_from_json(j.at("target")), {}, std::nullopt, trace_source_from_string(j.at("source").get<std::string>()),
                       j.at("seed").get<std::uint64_t>()};
    if (!j.at("success_turn").is_null()) t.success_turn = j["success_turn"].get<int>();
    for (const auto& turn : j.at("turns")) {
      Turn out{example_from_json(turn.at("example")), {}};
      for (const auto& g : turn.at("guesses")) out.guesses.push_back({program_from_json(g.at(0)), g.at(1).get<double>()});
      t.turns.push_back(std::move(out));
    }
    return t;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed trace: ") + e.what());
  }
}

inline std::string traces_to_jsonl(const std::vector<InteractionTrace>& traces) {
  std::string out;
  for (const auto& t : traces) out += to_json(t).dump() + "\n";
  return out;
}

inline std::vector<InteractionTrace> traces_from_jsonl(std::string_view text) {
  std::vector<InteractionTrace> out;
  std::istringstream in{std::string(text)};
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(trace_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw FormatError("trace line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

// ---- metric reports -----------------------------------------------------

inline json to_json(const MetricReport& r) {
  auto arr = [](const std::array<double, kMetricTurns>& a) { return json(std::vector<double>(a.begin(), a.end())); };
  return {{"schema", kReportSchema},
          {"top1_at", arr(r.top1_at)},
          {"top10_at", arr(r.top10_at)},
          {"ed1_at", arr(r.ed1_at)},
          {"top1", r.top1},
          {"top10", r.top10},
          {"ed1", r.ed1},
          {"top1_se", r.top1_se},
          {"top10_se", r.top10_se},
          {"ed1_se", r.ed1_se},
          {"top1_at10_se", r.top1_at10_se},
          {"top10_at10_se", r.top10_at10_se},
          {"ed1_at10_se", r.ed1_at10_se},
          {"n_traces", r.n_traces},
          {"resamples", r.resamples},
          {"top10_semantic_dedupe", r.top10_semantic_dedupe}};
}

inline MetricReport report_from_json(const json& j) {
  try {
    if (j.value("schema", "") != kReportSchema) throw FormatError("not a prax report");
    MetricReport r;
    auto arr = [&](const char* k, std::array<double, kMetricTurns>& out) {
      const auto v = j.at(k).get<std::vector<double>>();
      if (v.size() != out.size()) throw FormatError(std::string(k) + " must have 10 entries");
      std::copy(v.begin(), v.end(), out.begin());
    };
    arr("top1_at", r.top1_at);
    arr("top10_at", r.top10_at);
    arr("ed1_at", r.ed1_at);
    r.top1 = j.at("top1").get<double>();
    r.top10 = j.at("top10").get<double>();
    r.ed1 = j.at("ed1").get<double>();
    r.top1_se = j.at("top1_se").get<double>();
    r.top10_se = j.at("top10_se").get<double>();
    r.ed1_se = j.at("ed1_se").get<double>();
    r.top1_at10_se = j.at("top1_at10_se").get<double>();
    r.top10_at10_se = j.at("top10_at10_se").get<double>();
    r.ed1_at10_se = j.at("ed1_at10_se").get<double>();
    r.n_traces = j.at("n_traces").get<std::size_t>();
    r.resamples = j.at("resamples").get<int>();
    r.top10_semantic_dedupe = j.at("top10_semantic_dedupe").get<bool>();
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
}

}  // namespace prax::io
