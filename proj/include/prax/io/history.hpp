#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "prax/bootstrap.hpp"
#include "prax/io/formats.hpp"

namespace prax::io {

/// On-disk training history:
///   base/{listener,speaker}.json, base/metrics.json
///   round<r>/dataset.jsonl, round<r>/{listener,speaker}.json, round<r>/metrics.json
///   round<r>/timing.json (wall time; the only non-deterministic file)
///   summary.json
struct History {
  Snapshots base;
  std::optional<MetricReport> base_validation;
  std::vector<RoundRecord> rounds;
};

inline std::filesystem::path round_dir(const std::filesystem::path& root, int r) { return root / ("round" + std::to_string(r)); }

inline void save_base(const std::filesystem::path& root, const Snapshots& base, const CheckpointMeta& meta,
                      const std::optional<MetricReport>& validation) {
  save_checkpoint(root / "base" / "listener.json", base.listener, meta);
  save_checkpoint(root / "base" / "speaker.json", base.speaker, meta);
  if (validation) write_file(root / "base" / "metrics.json", json{{"version", 0}, {"validation", to_json(*validation)}}.dump(2) + "\n");
}

inline void save_round(const std::filesystem::path& root, const RoundRecord& rec, CheckpointMeta meta) {
  const auto dir = round_dir(root, rec.round);
  meta.round = rec.round;
  save_dataset(dir / "dataset.jsonl", rec.dataset);
  save_checkpoint(dir / "listener.json", rec.listener, meta);
  save_checkpoint(dir / "speaker.json", rec.speaker, meta);
  const json metrics = {{"round", rec.round},
                        {"version", rec.round + 1},
                        {"seed", rec.seed},
                        {"programs", rec.programs},
                        {"validation", to_json(rec.validation)}};
  write_file(dir / "metrics.json", metrics.dump(2) + "\n");
  write_file(dir / "timing.json", json{{"wall_time", rec.wall_time}}.dump(2) + "\n");
}

inline RoundRecord load_round(const std::filesystem::path& root, int r) {
  const auto dir = round_dir(root, r);
  RoundRecord rec;
  const auto metrics = json::parse(read_file(dir / "metrics.json"));
  rec.round = metrics.at("round").get<int>();
  if (rec.round != r) throw FormatError(dir.string() + " records round " + std::to_string(rec.round));
  rec.seed = metrics.at("seed").get<std::uint64_t>();
  rec.programs = metrics.at("programs").get<std::vector<std::string>>();
  rec.validation = report_from_json(metrics.at("validation"));
  rec.dataset = load_dataset(dir / "dataset.jsonl");
  rec.listener = load_listener(dir / "listener.json").snapshot;
  rec.speaker = load_speaker(dir / "speaker.json").snapshot;
  if (std::filesystem::exists(dir / "timing.json"))
    rec.wall_time = json::parse(read_file(dir / "timing.json")).at("wall_time").get<double>();
  return rec;
}

/// Base snapshots plus every contiguous completed round.
inline History load_history(const std::filesystem::path& root) {
  History h;
  h.base = {load_listener(root / "base" / "listener.json").snapshot, load_speaker(root / "base" / "speaker.json").snapshot};
  if (std::filesystem::exists(root / "base" / "metrics.json"))
    h.base_validation = report_from_json(json::parse(read_file(root / "base" / "metrics.json")).at("validation"));
  for (int r = 0; std::filesystem::exists(round_dir(root, r) / "metrics.json"); ++r) h.rounds.push_back(load_round(root, r));
  return h;
}

inline void save_summary(const std::filesystem::path& root, const TrainingResult& res, const std::string& metric) {
  json versions = json::array();
  versions.push_back({{"version", 0}, {"round", nullptr}, {metric, metric_value(res.base_validation, metric)}});
  for (const auto& r : res.rounds) versions.push_back({{"version", r.round + 1}, {"round", r.round}, {metric, metric_value(r.validation, metric)}});
  const json j = {{"selection_metric", metric},
                  {"selected_version", res.selected},
                  {"selected_dir", res.selected == 0 ? std::string("base") : "round" + std::to_string(res.selected - 1)},
                  {"versions", versions}};
  write_file(root / "summary.json", j.dump(2) + "\n");
}

/// A checkpoint argument: a file, a directory holding listener.json, or a
/// name such as "base" or "round4" under root.
inline std::filesystem::path resolve_checkpoint(const std::string& arg, const std::filesystem::path& root,
                                                const std::string& kind = "listener") {
  for (const std::filesystem::path& p : {std::filesystem::path(arg), root / arg}) {
    if (std::filesystem::is_regular_file(p)) return p;
    if (std::filesystem::is_directory(p) && std::filesystem::exists(p / (kind + ".json"))) return p / (kind + ".json");
  }
  throw FormatError("no " + kind + " checkpoint at " + arg);
}

}  // namespace prax::io
