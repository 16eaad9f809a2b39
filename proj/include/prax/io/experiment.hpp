#pragma once

#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "prax/bootstrap.hpp"
#include "prax/io/config.hpp"
#include "prax/io/formats.hpp"

namespace prax::io {

/// Everything a run derives from its config: the program distribution,
/// the validation set and the seeds of each stage.
class Experiment {
 public:
  explicit Experiment(Config cfg) : cfg_(std::move(cfg)), dist_(std::make_shared<ProgramDistribution>(cfg_.domain)) {
    cfg_.validate();
    if (!cfg_.validation.data.empty()) {
      validation_data_ = load_dataset(cfg_.validation.data);
      if (validation_data_.empty()) throw ConfigError("validation data " + cfg_.validation.data + " is empty");
      for (const auto& d : validation_data_) held_out_names_.insert(d.program.text());
    } else {
      Rng rng(cfg_.validation.seed);
      held_out_ = draw_fresh_programs(source(), cfg_.validation.programs, held_out_names_, rng);
    }
  }

  const Config& config() const noexcept { return cfg_; }

  ProgramSource source() const {
    return [dist = dist_](Rng& rng) { return (*dist)(rng); };
  }

  std::uint64_t seed(std::string_view stage) const { return derive_seed(cfg_.seed, stable_hash(stage)); }

  /// Held-out target programs (empty when validating on recorded data).
  const std::vector<RegexProgram>& held_out() const noexcept { return held_out_; }
  /// Texts training must never draw.
  const std::unordered_set<std::string>& excluded() const noexcept { return held_out_names_; }

  /// Enumerated programs and examples for the exact-RSA simulated speaker.
  std::shared_ptr<const ExactRsa> universe() const {
    if (!universe_) {
      EnumerationConfig ec;
      ec.literals = cfg_.validation.universe_literals;
      ec.max_tokens = cfg_.validation.universe_max_tokens;
      universe_ = std::make_shared<const ExactRsa>(dedupe_languages(enumerate_programs(ec)),
                                                   enumerate_examples(cfg_.validation.universe_literals, cfg_.validation.universe_max_length));
    }
    return universe_;
  }

  Validator validator() const {
    if (!validation_data_.empty()) return replay_validator(validation_data_, cfg_.eval, seed("validation"));
    return simulated_validator(held_out_, exact_rsa_speaker(universe()), cfg_.eval, seed("validation"));
  }

  Snapshots train_base(Dataset* data_out = nullptr) const {
    return train_base_models(cfg_.listener, cfg_.speaker, source(), cfg_.base_data, cfg_.base_train, cfg_.base_train, seed("base"),
                             held_out_names_, data_out);
  }

  TrainingResult train(const Snapshots& base, TrainingHooks hooks = {}) const {
    hooks.excluded.insert(held_out_names_.begin(), held_out_names_.end());
    return run_training(cfg_.bootstrap, base, source(), validator(), seed("bootstrap"), std::move(hooks));
  }

  /// Simulated interactions with the exact-RSA speaker on the held-out set.
  std::vector<InteractionTrace> simulate(const ListenerSnapshot& listener) const {
    if (held_out_.empty()) throw ConfigError("simulation needs held-out programs; validation.data is set");
    const auto speaker = exact_rsa_speaker(universe());
    ProgramCache cache;
    std::vector<InteractionTrace> out;
    for (std::size_t i = 0; i < held_out_.size(); ++i)
      out.push_back(simulate_interaction(held_out_[i], listener, speaker, cfg_.eval, derive_seed(seed("validation"), i), &cache));
    return out;
  }

 private:
  Config cfg_;
  std::shared_ptr<ProgramDistribution> dist_;
  std::vector<RegexProgram> held_out_;
  std::unordered_set<std::string> held_out_names_;
  Dataset validation_data_;
  mutable std::shared_ptr<const ExactRsa> universe_;
};

}  // namespace prax::io
