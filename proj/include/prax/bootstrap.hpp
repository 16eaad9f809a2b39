#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "prax/enumerate.hpp"
#include "prax/eval.hpp"
#include "prax/log.hpp"
#include "prax/models.hpp"
#include "prax/rsa.hpp"
#include "prax/sampler.hpp"

namespace prax {

/// Program distribution: a mixture of the enumerated toy domain and the
/// template sampler.
struct DomainConfig {
  double toy_fraction = 0.5;
  EnumerationConfig toy;
  SamplerConfig medium;

  void validate() const {
    if (toy_fraction < 0.0 || toy_fraction > 1.0) throw std::invalid_argument("domain.toy_fraction must be in [0, 1]");
    medium.validate();
  }
};

class ProgramDistribution {
 public:
  explicit ProgramDistribution(DomainConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.toy_fraction > 0.0) {
      toy_ = dedupe_languages(enumerate_programs(cfg_.toy));
      if (toy_.empty()) throw std::invalid_argument("toy domain is empty");
    }
  }

  RegexProgram operator()(Rng& rng) const {
    if (!toy_.empty() && rng.bernoulli(cfg_.toy_fraction)) return toy_[rng.below(toy_.size())];
    return sample_program(cfg_.medium, rng);
  }

  const DomainConfig& config() const noexcept { return cfg_; }

 private:
  DomainConfig cfg_;
  std::vector<RegexProgram> toy_;
};

using ProgramSource = std::function<RegexProgram(Rng&)>;

/// k distinct programs not in used, drawn from source.  Adds them to used.
inline std::vector<RegexProgram> draw_fresh_programs(const ProgramSource& source, int k, std::unordered_set<std::string>& used,
                                                     Rng& rng) {
  std::vector<RegexProgram> out;
  for (long attempt = 0; static_cast<int>(out.size()) < k; ++attempt) {
    if (attempt > 1000L * k + 10000) throw std::runtime_error("program distribution exhausted");
    RegexProgram p = source(rng);
    if (used.insert(p.text()).second) out.push_back(std::move(p));
  }
  return out;
}

struct LiteralDataConfig {
  int programs = 5000;
  int specs_per_program = 3;
  int max_spec_len = 15;  // spec length uniform in 0..max
};

/// Random ("literal") specifications for base training.
inline Dataset literal_dataset(const std::vector<RegexProgram>& programs, const LiteralDataConfig& cfg, const ExampleSpace& space,
                               std::uint64_t seed) {
  Dataset out;
  for (std::size_t i = 0; i < programs.size(); ++i)
    for (int j = 0; j < cfg.specs_per_program; ++j) {
      Rng rng(derive_seed(seed, i, static_cast<std::uint64_t>(j)));
      const int n = rng.uniform_int(0, cfg.max_spec_len);
      try {
        out.push_back({programs[i], sample_random_spec(programs[i], n, rng, space), "literal", std::nullopt});
      } catch (const EmptyLanguage&) {
        log(LogLevel::Debug, "literal data: no examples for " + programs[i].text());
      }
    }
  return out;
}

struct Snapshots {
  ListenerSnapshot listener;
  SpeakerSnapshot speaker;
};

/// Metric report of a listener on the validation set; the argument is the
/// listener version.
using Validator = std::function<MetricReport(const ListenerSnapshot&)>;

/// Selection metric by name: top1, top10, ed1 (turn averages) or their @10 forms.
inline double metric_value(const MetricReport& r, const std::string& name) {
  if (name == "top1") return r.top1;
  if (name == "top10") return r.top10;
  if (name == "ed1") return r.ed1;
  if (name == "top1@10") return r.top1_at[9];
  if (name == "top10@10") return r.top10_at[9];
  if (name == "ed1@10") return r.ed1_at[9];
  throw std::invalid_argument("unknown metric: " + name);
}

/// Held-out programs described by a simulated speaker.
inline Validator simulated_validator(std::vector<RegexProgram> programs, SimulatedSpeaker speaker, EvalConfig cfg, std::uint64_t seed) {
  return [programs = std::move(programs), speaker = std::move(speaker), cfg, seed](const ListenerSnapshot& listener) {
    ProgramCache cache;
    std::vector<InteractionTrace> traces;
    for (std::size_t i = 0; i < programs.size(); ++i)
      traces.push_back(simulate_interaction(programs[i], listener, speaker, cfg, derive_seed(seed, i), &cache));
    return compute_metrics(traces, 1000, seed);
  };
}

/// Recorded specifications replayed one example per turn.
inline Validator replay_validator(Dataset data, EvalConfig cfg, std::uint64_t seed) {
  return [data = std::move(data), cfg, seed](const ListenerSnapshot& listener) {
    return compute_metrics(replay_eval(listener, data, cfg, seed), 1000, seed);
  };
}

struct BootstrapConfig {
  int r_max = 20;
  int k = 1024;
  RsaConfig rsa;
  TrainConfig listener_train;
  TrainConfig speaker_train;
  std::string selection_metric = "top1";

  void validate() const {
    if (r_max < 1) throw std::invalid_argument("bootstrap.r_max must be >= 1");
    if (k < 1) throw std::invalid_argument("bootstrap.k must be >= 1");
    rsa.validate();
  }
};

struct RoundRecord {
  int round = 0;                       // data generated in this round trains version round + 1
  std::vector<std::string> programs;   // every program drawn, including dropped ones
  Dataset dataset;
  ListenerSnapshot listener;
  SpeakerSnapshot speaker;
  MetricReport validation;
  double wall_time = 0.0;
  std::uint64_t seed = 0;
};

/// Generates D_r with base and current models, then retrains both models
/// from base on the union of every round's data.
inline RoundRecord run_round(int r, const Snapshots& base, const Snapshots& current, const std::vector<RegexProgram>& fresh,
                             const Dataset& previous, const BootstrapConfig& cfg, const Validator& validate, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  RoundRecord rec;
  rec.round = r;
  rec.seed = seed;
  const std::vector<ListenerSnapshot> listeners{base.listener, current.listener};
  const std::vector<SpeakerSnapshot> speakers{base.speaker, current.speaker};
  for (std::size_t i = 0; i < fresh.size(); ++i) {
    rec.programs.push_back(fresh[i].text());
    Rng rng(derive_seed(seed, i));
    Specification spec;
    try {
      spec = generate_pragmatic_spec(fresh[i], listeners, speakers, cfg.rsa, rng);
    } catch (const std::exception& e) {
      log(LogLevel::Warn, "round " + std::to_string(r) + ": dropping " + fresh[i].text() + ": " + e.what());
      continue;
    }
    if (spec.empty()) {
      log(LogLevel::Info, "round " + std::to_string(r) + ": no example for " + fresh[i].text());
      continue;
    }
    rec.dataset.push_back({fresh[i], std::move(spec), "pragmatic", r});
  }
  Dataset all = previous;
  all.insert(all.end(), rec.dataset.begin(), rec.dataset.end());
  if (all.empty()) throw DegenerateData("no pragmatic data generated by round " + std::to_string(r));
  rec.listener = train_listener(base.listener, all, cfg.listener_train, r + 1);
  rec.speaker = train_speaker(base.speaker, all, cfg.speaker_train, r + 1);
  if (validate) rec.validation = validate(rec.listener);
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

struct TrainingResult {
  int selected = 0;  // listener version; 0 is the base model
  Snapshots snapshots;
  MetricReport base_validation;
  std::vector<RoundRecord> rounds;
};

/// Version with the best selection metric; earliest wins ties.
inline int select_version(const MetricReport& base, const std::vector<RoundRecord>& rounds, const std::string& metric) {
  int best = 0;
  double best_v = metric_value(base, metric);
  for (const auto& r : rounds) {
    const double v = metric_value(r.validation, metric);
    if (v > best_v) {
      best_v = v;
      best = r.round + 1;
    }
  }
  return best;
}

struct TrainingHooks {
  /// Called after every completed round (for persistence).
  std::function<void(const RoundRecord&)> on_round;
  /// Rounds already completed by an earlier run, in order.
  std::vector<RoundRecord> completed;
  /// Base validation from the earlier run, when resuming.
  std::optional<MetricReport> base_validation;
  /// Program texts never to draw (e.g. held-out validation targets).
  std::unordered_set<std::string> excluded;
};

/// The outer self-play loop: rounds 0..r_max-1, then validation-driven selection.
inline TrainingResult run_training(const BootstrapConfig& cfg, const Snapshots& base, const ProgramSource& programs,
                                   const Validator& validate, std::uint64_t seed, TrainingHooks hooks = {}) {
  cfg.validate();
  if (!validate) throw std::invalid_argument("run_training needs a validator");
  TrainingResult out;
  out.base_validation = hooks.base_validation ? *hooks.base_validation : validate(base.listener);
  std::unordered_set<std::string> used = hooks.excluded;
  Dataset all;
  Snapshots current = base;
  for (auto& rec : hooks.completed) {
    if (rec.round != static_cast<int>(out.rounds.size())) throw std::invalid_argument("resumed rounds are not contiguous");
    used.insert(rec.programs.begin(), rec.programs.end());
    all.insert(all.end(), rec.dataset.begin(), rec.dataset.end());
    current = {rec.listener, rec.speaker};
    out.rounds.push_back(std::move(rec));
  }
  for (int r = static_cast<int>(out.rounds.size()); r < cfg.r_max; ++r) {
    Rng prng(derive_seed(seed, 0x9f0, static_cast<std::uint64_t>(r)));
    const auto fresh = draw_fresh_programs(programs, cfg.k, used, prng);
    auto rec = run_round(r, base, current, fresh, all, cfg, validate, derive_seed(seed, static_cast<std::uint64_t>(r)));
    log(LogLevel::Info, "round " + std::to_string(r) + ": " + std::to_string(rec.dataset.size()) + " specs, " +
                            cfg.selection_metric + " = " + std::to_string(metric_value(rec.validation, cfg.selection_metric)));
    all.insert(all.end(), rec.dataset.begin(), rec.dataset.end());
    current = {rec.listener, rec.speaker};
    if (hooks.on_round) hooks.on_round(rec);
    out.rounds.push_back(std::move(rec));
  }
  out.selected = select_version(out.base_validation, out.rounds, cfg.selection_metric);
  out.snapshots = out.selected == 0 ? base
                                    : Snapshots{out.rounds[static_cast<std::size_t>(out.selected - 1)].listener,
                                                out.rounds[static_cast<std::size_t>(out.selected - 1)].speaker};
  return out;
}

/// Base ("literal") models trained on random specifications.
inline Snapshots train_base_models(const ListenerSettings& ls, const SpeakerSettings& ss, const ProgramSource& programs,
                                   const LiteralDataConfig& data_cfg, const TrainConfig& listener_train,
                                   const TrainConfig& speaker_train, std::uint64_t seed,
                                   const std::unordered_set<std::string>& excluded = {}, Dataset* data_out = nullptr) {
  std::unordered_set<std::string> used = excluded;
  Rng rng(derive_seed(seed, 0xba5e));
  const auto progs = draw_fresh_programs(programs, data_cfg.programs, used, rng);
  Dataset data = literal_dataset(progs, data_cfg, ss.space, derive_seed(seed, 0xda7a));
  TrainConfig lt = listener_train;
  lt.prefixes = false;
  Snapshots s{train_listener(ListenerSnapshot(ls), data, lt, 0), SpeakerSnapshot(ss)};
  Dataset nonempty;
  for (const auto& d : data)
    if (!d.spec.empty()) nonempty.push_back(d);
  if (!nonempty.empty()) s.speaker = train_speaker(SpeakerSnapshot(ss), nonempty, speaker_train, 0);
  if (data_out) *data_out = std::move(data);
  return s;
}

}  // namespace prax
