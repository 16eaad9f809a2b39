#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "prax/models.hpp"
#include "prax/rsa.hpp"

namespace prax {

inline constexpr int kMetricTurns = 10;

enum class TraceSource { Simulated, ReplayedHuman, LiveSession };

inline std::string to_string(TraceSource s) {
  switch (s) {
    case TraceSource::Simulated: return "simulated";
    case TraceSource::ReplayedHuman: return "replayed-human";
    case TraceSource::LiveSession: return "live-session";
  }
  return "simulated";
}

inline TraceSource trace_source_from_string(const std::string& s) {
  if (s == "simulated") return TraceSource::Simulated;
  if (s == "replayed-human") return TraceSource::ReplayedHuman;
  if (s == "live-session") return TraceSource::LiveSession;
  throw std::invalid_argument("unknown trace source: " + s);
}

struct Turn {
  Example example;
  std::vector<ScoredProgram> guesses;  // ranked, at most top_k
};

struct InteractionTrace {
  RegexProgram target;
  std::vector<Turn> turns;
  std::optional<int> success_turn;  // 1-based
  TraceSource source = TraceSource::Simulated;
  std::uint64_t seed = 0;

  Specification spec() const {
    Specification s;
    for (const auto& t : turns) s.push_back(t.example);
    return s;
  }
};

struct EvalConfig {
  int n_samples = 500;
  int top_k = 10;
  int max_turns = kMetricTurns;

  void validate() const {
    if (n_samples < 1) throw std::invalid_argument("eval.n_samples must be >= 1");
    if (top_k < 1) throw std::invalid_argument("eval.top_k must be >= 1");
    if (max_turns < 0) throw std::invalid_argument("eval.max_turns must be >= 0");
  }
};

/// Interns programs by text so each DFA is compiled once.  Not thread-safe.
class ProgramCache {
 public:
  RegexProgram intern(RegexProgram p) {
    if (map_.size() > limit_) map_.clear();
    return map_.try_emplace(p.text(), p).first->second;
  }

 private:
  std::unordered_map<std::string, RegexProgram> map_;
  std::size_t limit_ = 200000;
};

/// Sample, drop surface duplicates and inconsistent programs, rank by score
/// (ties by text).  The first top_k entries are distinct languages.
inline std::vector<ScoredProgram> infer_topk(const ListenerSnapshot& listener, const Specification& spec, int n_samples, Rng& rng,
                                             int top_k = 10, ProgramCache* cache = nullptr) {
  if (n_samples < 1) throw std::invalid_argument("infer_topk needs n_samples >= 1");
  std::vector<ScoredProgram> ranked;
  std::unordered_set<std::string> seen;
  for (auto& sp : listener_sample(listener, spec, n_samples, rng)) {
    if (!seen.insert(sp.program.text()).second) continue;
    if (cache) sp.program = cache->intern(std::move(sp.program));
    if (detail::consistent_or_false(sp.program, spec)) ranked.push_back(std::move(sp));
  }
  std::sort(ranked.begin(), ranked.end(), [](const ScoredProgram& a, const ScoredProgram& b) {
    return a.log_score != b.log_score ? a.log_score > b.log_score : a.program.text() < b.program.text();
  });
  std::vector<ScoredProgram> out;
  std::size_t i = 0;
  for (; i < ranked.size() && static_cast<int>(out.size()) < top_k; ++i) {
    const bool dup = std::any_of(out.begin(), out.end(),
                                 [&](const ScoredProgram& k) { return semantically_equal(k.program, ranked[i].program); });
    if (!dup) out.push_back(std::move(ranked[i]));
  }
  for (; i < ranked.size(); ++i) out.push_back(std::move(ranked[i]));
  return out;
}

/// Next example for target after partial, or nothing when exhausted.
using SimulatedSpeaker = std::function<std::optional<Example>(const RegexProgram& target, const Specification& partial, Rng&)>;

inline SimulatedSpeaker exact_rsa_speaker(std::shared_ptr<const ExactRsa> rsa) {
  return [rsa = std::move(rsa)](const RegexProgram& target, const Specification& partial, Rng&) {
    return rsa->next_example(target, partial);
  };
}

/// Samples the speaker snapshot's proposal distribution.
inline SimulatedSpeaker snapshot_speaker(SpeakerSnapshot speaker) {
  return [speaker = std::move(speaker)](const RegexProgram& target, const Specification& partial, Rng& rng) -> std::optional<Example> {
    const auto out = speaker_propose(speaker, target, partial, 1, rng);
    if (out.empty()) return std::nullopt;
    return out.front().example;
  };
}

/// Per-turn inference stream; shared by simulation, replay and live play so
/// all three rank identically.
inline Rng turn_rng(std::uint64_t trace_seed, int turn) { return Rng(derive_seed(trace_seed, static_cast<std::uint64_t>(turn))); }

/// Appends one turn and reports whether the top guess is the target.
inline bool play_turn(InteractionTrace& trace, const ListenerSnapshot& listener, const Example& example, const EvalConfig& cfg,
                      ProgramCache* cache = nullptr) {
  Turn turn{example, {}};
  auto spec = trace.spec();
  spec.push_back(example);
  const int t = static_cast<int>(trace.turns.size()) + 1;
  Rng rng = turn_rng(trace.seed, t);
  auto guesses = infer_topk(listener, spec, cfg.n_samples, rng, cfg.top_k, cache);
  if (static_cast<int>(guesses.size()) > cfg.top_k) guesses.resize(static_cast<std::size_t>(cfg.top_k));
  turn.guesses = std::move(guesses);
  const bool solved = !turn.guesses.empty() && semantically_equal(turn.guesses.front().program, trace.target);
  trace.turns.push_back(std::move(turn));
  if (solved && !trace.success_turn) trace.success_turn = t;
  return solved;
}

inline InteractionTrace simulate_interaction(const RegexProgram& target, const ListenerSnapshot& listener,
                                             const SimulatedSpeaker& speaker, const EvalConfig& cfg, std::uint64_t seed,
                                             ProgramCache* cache = nullptr) {
  cfg.validate();
  InteractionTrace trace{target, {}, std::nullopt, TraceSource::Simulated, seed};
  for (int t = 1; t <= cfg.max_turns; ++t) {
    Rng speaker_rng(derive_seed(seed, 0x5eed, static_cast<std::uint64_t>(t)));
    const auto example = speaker(target, trace.spec(), speaker_rng);
    if (!example) break;
    if (play_turn(trace, listener, *example, cfg, cache)) break;
  }
  return trace;
}

/// Feeds recorded examples one at a time, stopping at the first success.
inline InteractionTrace replay_spec(const ListenerSnapshot& listener, const RegexProgram& target, const Specification& spec,
                                    const EvalConfig& cfg, std::uint64_t seed, TraceSource source, ProgramCache* cache = nullptr) {
  InteractionTrace trace{target, {}, std::nullopt, source, seed};
  for (std::size_t i = 0; i < spec.size() && static_cast<int>(i) < cfg.max_turns; ++i)
    if (play_turn(trace, listener, spec[i], cfg, cache)) break;
  return trace;
}

/// Replays every consistent record; inconsistent records are skipped and logged.
inline std::vector<InteractionTrace> replay_eval(const ListenerSnapshot& listener, const Dataset& recorded, const EvalConfig& cfg,
                                                 std::uint64_t seed, TraceSource source = TraceSource::ReplayedHuman) {
  cfg.validate();
  ProgramCache cache;
  std::vector<InteractionTrace> out;
  for (std::size_t i = 0; i < recorded.size(); ++i) {
    const auto& d = recorded[i];
    if (!is_consistent(d.program, d.spec)) {
      log(LogLevel::Warn, "replay: skipping inconsistent record for " + d.program.text());
      continue;
    }
    out.push_back(replay_spec(listener, d.program, d.spec, cfg, derive_seed(seed, i), source, &cache));
  }
  return out;
}

struct MetricReport {
  std::array<double, kMetricTurns> top1_at{}, top10_at{}, ed1_at{};
  double top1 = 0.0, top10 = 0.0, ed1 = 0.0;           // turn averages
  double top1_se = 0.0, top10_se = 0.0, ed1_se = 0.0;  // bootstrap standard errors
  double top1_at10_se = 0.0, top10_at10_se = 0.0, ed1_at10_se = 0.0;
  std::size_t n_traces = 0;
  int resamples = 1000;
  bool top10_semantic_dedupe = true;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

namespace detail {

/// First turn (1-based) at which each criterion held, or 0.
struct TraceHits {
  int top1 = 0, top10 = 0, ed1 = 0;
};

inline TraceHits trace_hits(const InteractionTrace& tr) {
  TraceHits h;
  for (std::size_t i = 0; i < tr.turns.size(); ++i) {
    const int t = static_cast<int>(i) + 1;
    const auto& g = tr.turns[i].guesses;
    if (g.empty()) continue;
    const bool top1 = semantically_equal(g.front().program, tr.target);
    bool top10 = top1;
    for (std::size_t k = 1; k < g.size() && k < 10 && !top10; ++k) top10 = semantically_equal(g[k].program, tr.target);
    const bool ed1 = top1 || token_edit_distance(g.front().program, tr.target) <= 1;
    if (top1 && !h.top1) h.top1 = t;
    if (top10 && !h.top10) h.top10 = t;
    if (ed1 && !h.ed1) h.ed1 = t;
  }
  return h;
}

inline double turn_average(int hit) { return hit && hit <= kMetricTurns ? static_cast<double>(kMetricTurns - hit + 1) / kMetricTurns : 0.0; }

inline double at10(int hit) { return hit && hit <= kMetricTurns ? 1.0 : 0.0; }

inline double std_error(const std::vector<double>& per_trace, int resamples, std::uint64_t seed) {
  if (per_trace.size() < 2) return 0.0;
  Rng rng(seed);
  std::vector<double> means;
  means.reserve(static_cast<std::size_t>(resamples));
  for (int r = 0; r < resamples; ++r) {
    double s = 0.0;
    for (std::size_t i = 0; i < per_trace.size(); ++i) s += per_trace[rng.below(per_trace.size())];
    means.push_back(s / static_cast<double>(per_trace.size()));
  }
  double mean = 0.0;
  for (double m : means) mean += m;
  mean /= static_cast<double>(means.size());
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  return std::sqrt(var / static_cast<double>(means.size() - 1));
}

}  // namespace detail

/// Cumulative @t metrics and their turn averages over t = 1..10.
inline MetricReport compute_metrics(const std::vector<InteractionTrace>& traces, int resamples = 1000, std::uint64_t seed = 0) {
  if (traces.empty()) throw std::invalid_argument("compute_metrics needs traces");
  MetricReport r;
  r.n_traces = traces.size();
  r.resamples = resamples;
  std::vector<double> t1, t10, e1, t1_10, t10_10, e1_10;
  for (const auto& tr : traces) {
    const auto h = detail::trace_hits(tr);
    for (int t = 1; t <= kMetricTurns; ++t) {
      r.top1_at[static_cast<std::size_t>(t - 1)] += (h.top1 && h.top1 <= t) ? 1.0 : 0.0;
      r.top10_at[static_cast<std::size_t>(t - 1)] += (h.top10 && h.top10 <= t) ? 1.0 : 0.0;
      r.ed1_at[static_cast<std::size_t>(t - 1)] += (h.ed1 && h.ed1 <= t) ? 1.0 : 0.0;
    }
    t1.push_back(detail::turn_average(h.top1));
    t10.push_back(detail::turn_average(h.top10));
    e1.push_back(detail::turn_average(h.ed1));
    t1_10.push_back(detail::at10(h.top1));
    t10_10.push_back(detail::at10(h.top10));
    e1_10.push_back(detail::at10(h.ed1));
  }
  const double n = static_cast<double>(traces.size());
  for (int t = 0; t < kMetricTurns; ++t) {
    r.top1_at[static_cast<std::size_t>(t)] /= n;
    r.top10_at[static_cast<std::size_t>(t)] /= n;
    r.ed1_at[static_cast<std::size_t>(t)] /= n;
  }
  auto mean = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / n;
  };
  r.top1 = mean(t1);
  r.top10 = mean(t10);
  r.ed1 = mean(e1);
  r.top1_se = detail::std_error(t1, resamples, derive_seed(seed, 1));
  r.top10_se = detail::std_error(t10, resamples, derive_seed(seed, 2));
  r.ed1_se = detail::std_error(e1, resamples, derive_seed(seed, 3));
  r.top1_at10_se = detail::std_error(t1_10, resamples, derive_seed(seed, 4));
  r.top10_at10_se = detail::std_error(t10_10, resamples, derive_seed(seed, 5));
  r.ed1_at10_se = detail::std_error(e1_10, resamples, derive_seed(seed, 6));
  return r;
}

/// Plain-text table: @10 values, turn averages, then the per-turn series.
inline std::string format_report(const MetricReport& r, const std::string& title = "model") {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-16s %-18s %-18s %-18s\n", "", "Top-1 (SE)", "Top-10 (SE)", "EditDist<=1 (SE)");
  out += buf;
  std::snprintf(buf, sizeof buf, "%-16s %.3f (%.3f)      %.3f (%.3f)      %.3f (%.3f)\n", (title + " @10").c_str(), r.top1_at[9],
                r.top1_at10_se, r.top10_at[9], r.top10_at10_se, r.ed1_at[9], r.ed1_at10_se);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-16s %.3f (%.3f)      %.3f (%.3f)      %.3f (%.3f)\n", (title + " avg").c_str(), r.top1, r.top1_se,
                r.top10, r.top10_se, r.ed1, r.ed1_se);
  out += buf;
  out += "\nturn  Top-1@t  Top-10@t  EditDist<=1@t\n";
  for (int t = 0; t < kMetricTurns; ++t) {
    std::snprintf(buf, sizeof buf, "%4d  %7.3f  %8.3f  %13.3f\n", t + 1, r.top1_at[static_cast<std::size_t>(t)],
                  r.top10_at[static_cast<std::size_t>(t)], r.ed1_at[static_cast<std::size_t>(t)]);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "\ntraces: %zu, bootstrap resamples: %d, top-10 deduplicated by language\n", r.n_traces, r.resamples);
  out += buf;
  return out;
}

}  // namespace prax
