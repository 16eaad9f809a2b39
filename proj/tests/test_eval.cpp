#include <gtest/gtest.h>

#include "prax/bootstrap.hpp"
#include "prax/enumerate.hpp"
#include "prax/eval.hpp"

namespace prax {
namespace {

RegexProgram P(std::string_view s) { return RegexProgram::parse(s); }

ListenerSettings small_listener() {
  ListenerSettings s;
  s.literals = "abc";
  s.classes = {};
  s.max_tokens = 10;
  s.max_arity = 4;
  s.max_repeat = 3;
  s.max_depth = 3;
  return s;
}

// Base listener trained on random specs for the toy programs over {a,b,c}.
const ListenerSnapshot& trained_listener() {
  static const ListenerSnapshot snap = [] {
    EnumerationConfig ec;
    ec.literals = "abc";
    ec.max_tokens = 4;
    const auto programs = dedupe_languages(enumerate_programs(ec));
    LiteralDataConfig lc;
    lc.specs_per_program = 2;
    TrainConfig tc;
    tc.epochs = 1;
    tc.prefixes = false;
    return train_listener(ListenerSnapshot(small_listener()), literal_dataset(programs, lc, {"abc", 6}, 1), tc, 0);
  }();
  return snap;
}

// A turn whose ranked guesses are the given programs.
Turn guessed(std::initializer_list<const char*> texts) {
  Turn t{{"a", true}, {}};
  double score = 0.0;
  for (const char* s : texts) t.guesses.push_back({P(s), score -= 1.0});
  return t;
}

InteractionTrace trace_of(const char* target, std::vector<Turn> turns) {
  InteractionTrace tr{P(target), std::move(turns), std::nullopt, TraceSource::Simulated, 0};
  return tr;
}

TEST(Metrics, SuccessAtTurnFourAveragesToPointSeven) {
  std::vector<Turn> turns{guessed({"b"}), guessed({"b"}), guessed({"b"}), guessed({"a"})};
  const auto r = compute_metrics({trace_of("a", turns)});
  for (int t = 0; t < kMetricTurns; ++t) EXPECT_EQ(r.top1_at[static_cast<std::size_t>(t)], t < 3 ? 0.0 : 1.0);
  EXPECT_DOUBLE_EQ(r.top1, 0.7);
}

TEST(Metrics, HandTraces) {
  EXPECT_DOUBLE_EQ(compute_metrics({trace_of("a", {guessed({"a"})})}).top1, 1.0);
  std::vector<Turn> ten(10, guessed({"b"}));
  ten.back() = guessed({"a"});
  EXPECT_DOUBLE_EQ(compute_metrics({trace_of("a", ten)}).top1, 0.1);
  // Mean of 1.0 and 0.7.
  const auto r = compute_metrics(
      {trace_of("a", {guessed({"a"})}), trace_of("a", {guessed({"b"}), guessed({"b"}), guessed({"b"}), guessed({"a"})})});
  EXPECT_DOUBLE_EQ(r.top1, 0.85);
  EXPECT_EQ(r.top1_at[0], 0.5);
  EXPECT_EQ(r.top1_at[3], 1.0);
}

TEST(Metrics, AllFailuresGiveZero) {
  const auto r = compute_metrics({trace_of("a", {guessed({"bcc"})}), trace_of("a+", {}), trace_of("ab", {guessed({})})});
  EXPECT_EQ(r.top1, 0.0);
  EXPECT_EQ(r.top10, 0.0);
  EXPECT_EQ(r.ed1, 0.0);
  for (int t = 0; t < kMetricTurns; ++t) {
    EXPECT_EQ(r.top1_at[static_cast<std::size_t>(t)], 0.0);
    EXPECT_EQ(r.top10_at[static_cast<std::size_t>(t)], 0.0);
    EXPECT_EQ(r.ed1_at[static_cast<std::size_t>(t)], 0.0);
  }
  EXPECT_EQ(r.top1_se, 0.0);
}

TEST(Metrics, SemanticMatchCounts) {
  const auto r = compute_metrics({trace_of("aa*", {guessed({"a+"})})});
  EXPECT_EQ(r.top1, 1.0);
  EXPECT_EQ(r.ed1, 1.0);
}

TEST(Metrics, TopTenAndEditDistance) {
  // Target second in the list at turn 1; one token away at turn 2; exact at turn 3.
  const auto r = compute_metrics({trace_of("ab", {guessed({"ccc", "ab"}), guessed({"abb"}), guessed({"ab"})})});
  EXPECT_EQ(r.top10_at[0], 1.0);
  EXPECT_EQ(r.ed1_at[0], 0.0);
  EXPECT_EQ(r.ed1_at[1], 1.0);
  EXPECT_EQ(r.top1_at[1], 0.0);
  EXPECT_EQ(r.top1_at[2], 1.0);
  EXPECT_DOUBLE_EQ(r.top10, 1.0);
  EXPECT_DOUBLE_EQ(r.ed1, 0.9);
  EXPECT_DOUBLE_EQ(r.top1, 0.8);
}

TEST(Metrics, ElevenAndLaterTurnsDoNotCount) {
  std::vector<Turn> turns(11, guessed({"b"}));
  turns.back() = guessed({"a"});
  const auto r = compute_metrics({trace_of("a", turns)});
  EXPECT_EQ(r.top1, 0.0);
  EXPECT_EQ(r.top1_at[9], 0.0);
}

TEST(Metrics, LateHitsNeverGoNegative) {
  std::vector<Turn> turns(12, guessed({"bcc"}));
  turns.back() = guessed({"a"});
  const auto r = compute_metrics({trace_of("a", turns)});
  EXPECT_EQ(r.top1, 0.0);
  EXPECT_EQ(r.top10, 0.0);
  EXPECT_EQ(r.ed1, 0.0);
}

TEST(Metrics, DominanceAndMonotonicityOnRandomTraces) {
  EnumerationConfig ec;
  ec.max_tokens = 3;
  const auto pool = enumerate_programs(ec);
  Rng rng(21);
  std::vector<InteractionTrace> traces;
  for (int i = 0; i < 300; ++i) {
    InteractionTrace tr{pool[rng.below(pool.size())], {}, std::nullopt, TraceSource::Simulated, 0};
    const int n = rng.uniform_int(0, 12);
    for (int t = 0; t < n; ++t) {
      Turn turn{{"a", true}, {}};
      const int k = rng.uniform_int(0, 10);
      for (int j = 0; j < k; ++j) turn.guesses.push_back({pool[rng.below(pool.size())], -static_cast<double>(j)});
      tr.turns.push_back(std::move(turn));
    }
    traces.push_back(std::move(tr));
  }
  const auto r = compute_metrics(traces, 200, 1);
  for (int t = 0; t < kMetricTurns; ++t) {
    const auto i = static_cast<std::size_t>(t);
    EXPECT_GE(r.top10_at[i], r.top1_at[i]);
    EXPECT_GE(r.ed1_at[i], r.top1_at[i]);
    if (t > 0) {
      EXPECT_GE(r.top1_at[i], r.top1_at[i - 1]);
      EXPECT_GE(r.top10_at[i], r.top10_at[i - 1]);
      EXPECT_GE(r.ed1_at[i], r.ed1_at[i - 1]);
    }
  }
  EXPECT_GE(r.top10, r.top1);
  EXPECT_GE(r.ed1, r.top1);
  EXPECT_GT(r.top1_se, 0.0);
  EXPECT_EQ(r, compute_metrics(traces, 200, 1));
}

TEST(Metrics, ReportTable) {
  const auto text = format_report(compute_metrics({trace_of("a", {guessed({"a"})})}), "literal");
  EXPECT_NE(text.find("literal @10"), std::string::npos);
  EXPECT_NE(text.find("1.000"), std::string::npos);
}

TEST(TraceSource, NamesRoundTrip) {
  for (auto s : {TraceSource::Simulated, TraceSource::ReplayedHuman, TraceSource::LiveSession})
    EXPECT_EQ(trace_source_from_string(to_string(s)), s);
  EXPECT_THROW(trace_source_from_string("human"), std::invalid_argument);
}

TEST(InferTopk, ConsistentRankedAndDeterministic) {
  const auto& snap = trained_listener();
  const Specification spec{{"ab", true}, {"aa", true}, {"abc", false}};
  Rng a(4), b(4);
  const auto out = infer_topk(snap, spec, 300, a);
  ASSERT_FALSE(out.empty());
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_TRUE(is_consistent(out[i].program, spec)) << out[i].program.text();
    if (i > 0) EXPECT_LE(out[i].log_score, out[i - 1].log_score);
    EXPECT_NE(out[i].program.text(), "a*b+c?");
  }
  for (std::size_t i = 0; i < out.size() && i < 10; ++i)
    for (std::size_t j = 0; j < i; ++j) EXPECT_FALSE(semantically_equal(out[i].program, out[j].program));
  const auto again = infer_topk(snap, spec, 300, b);
  ASSERT_EQ(out.size(), again.size());
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i].program.text(), again[i].program.text());
  Rng c(4);
  EXPECT_THROW(infer_topk(snap, spec, 0, c), std::invalid_argument);
}

TEST(InferTopk, EmptyWhenNothingConsistent) {
  const ListenerSnapshot snap(small_listener());
  Rng rng(1);
  EXPECT_TRUE(infer_topk(snap, {{"zzz", true}}, 50, rng).empty());
}

TEST(Simulate, ZeroTurnsGivesEmptyTrace) {
  const ListenerSnapshot snap(small_listener());
  EvalConfig cfg;
  cfg.max_turns = 0;
  const auto tr = simulate_interaction(P("a"), snap, [](auto&, auto&, Rng&) { return std::optional<Example>({"a", true}); }, cfg, 1);
  EXPECT_TRUE(tr.turns.empty());
  EXPECT_FALSE(tr.success_turn);
}

TEST(Simulate, SuccessHaltsTrace) {
  const ListenerSnapshot snap(small_listener());
  EnumerationConfig ec;
  ec.literals = "abc";
  ec.max_tokens = 3;
  const auto rsa = std::make_shared<ExactRsa>(dedupe_languages(enumerate_programs(ec)), enumerate_examples("abc", 3));
  EvalConfig cfg;
  cfg.n_samples = 200;
  int solved = 0;
  for (const char* text : {"a", "ab", "c+", "b|c", "a*b"}) {
    const auto tr = simulate_interaction(P(text), snap, exact_rsa_speaker(rsa), cfg, 3);
    EXPECT_LE(tr.turns.size(), 10u);
    EXPECT_TRUE(is_consistent(P(text), tr.spec()));
    if (tr.success_turn) {
      ++solved;
      EXPECT_EQ(static_cast<int>(tr.turns.size()), *tr.success_turn) << text;
      EXPECT_TRUE(semantically_equal(tr.turns.back().guesses.front().program, P(text)));
    }
  }
  EXPECT_GT(solved, 0);
}

TEST(Simulate, ExhaustedSpeakerEndsTrace) {
  const ListenerSnapshot snap(small_listener());
  const auto tr = simulate_interaction(P("a+"), snap, [](auto&, auto&, Rng&) { return std::optional<Example>(); }, {}, 1);
  EXPECT_TRUE(tr.turns.empty());
}

TEST(Replay, DeterministicAndMatchesLivePlay) {
  const ListenerSnapshot snap(small_listener());
  const Dataset data{{P("a"), {{"a", true}}}, {P("ab*"), {{"abb", true}, {"b", false}, {"a", true}}},
                     {P("c{2}"), {{"cc", true}, {"c", false}}}, {P("b"), {{"a", true}}}};
  EvalConfig cfg;
  cfg.n_samples = 200;
  const auto a = replay_eval(snap, data, cfg, 9);
  const auto b = replay_eval(snap, data, cfg, 9);
  ASSERT_EQ(a.size(), 3u);  // inconsistent record skipped
  EXPECT_EQ(a[0].success_turn, std::optional<int>(1));
  EXPECT_EQ(compute_metrics(a), compute_metrics(b));
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].source, TraceSource::ReplayedHuman);
    ASSERT_EQ(a[i].turns.size(), b[i].turns.size());
    // Turn by turn through play_turn with the same seed.
    InteractionTrace live{a[i].target, {}, std::nullopt, TraceSource::LiveSession, a[i].seed};
    for (std::size_t t = 0; t < a[i].turns.size(); ++t) {
      play_turn(live, snap, a[i].turns[t].example, cfg);
      ASSERT_EQ(live.turns[t].guesses.size(), a[i].turns[t].guesses.size());
      for (std::size_t g = 0; g < live.turns[t].guesses.size(); ++g)
        EXPECT_EQ(live.turns[t].guesses[g].program.text(), a[i].turns[t].guesses[g].program.text());
    }
    EXPECT_EQ(live.success_turn, a[i].success_turn);
  }
}

}  // namespace
}  // namespace prax
