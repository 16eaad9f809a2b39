#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "prax/models.hpp"

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

SpeakerSettings small_speaker() {
  SpeakerSettings s;
  s.space = {"abc", 6};
  return s;
}

std::vector<double> random_weights(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> w(n);
  for (auto& x : w) x = rng.uniform() * 2.0 - 1.0;
  return w;
}

TEST(Listener, ScoreIsFiniteForAnyProgram) {
  const ListenerSnapshot snap(small_listener());
  const Specification spec{{"ab", true}, {"c", false}};
  for (const char* text : {"a+b*", "a", "(a|b)*c{2,3}", "\\d+", "zz", "(((a*)*)*)*", "abcabcabcabc"}) {
    const double s = listener_score(snap, P(text), spec);
    EXPECT_TRUE(std::isfinite(s)) << text;
    EXPECT_LE(s, 0.0);
  }
}

TEST(Listener, DerivationProbabilitiesSumToOne) {
  // Every derivation of a grammar small enough to enumerate.
  ListenerSettings s;
  s.literals = "a";
  s.classes = {};
  s.max_arity = 2;
  s.max_repeat = 2;
  s.max_depth = 1;
  const ListenerSnapshot base(s);
  const ListenerSnapshot snap = base.with_weights(random_weights(base.weights().size(), 3), 0);
  const Specification spec{{"aa", true}, {"", false}};
  double total = 0.0;
  for (const char* text : {"a", "aa", "a|a", "a*", "a+", "a?", "a{1}", "a{1,2}", "a{2}"})
    total += std::exp(listener_score(snap, P(text), spec));
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(Listener, ShiftingOneChoiceLeavesScoresUnchanged) {
  const ListenerSnapshot base(small_listener());
  auto w = random_weights(base.weights().size(), 4);
  const ListenerSnapshot a = base.with_weights(w, 0);
  const auto names = base.grammar().layout().names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i].rfind("arity/concat/top/", 0) == 0) w[i] += 3.25;
  const ListenerSnapshot b = base.with_weights(w, 0);
  const Specification spec{{"abc", true}};
  for (const char* text : {"abc", "a+bc?", "(ab|c)*", "a|bc"})
    EXPECT_NEAR(listener_score(a, P(text), spec), listener_score(b, P(text), spec), 1e-9) << text;
}

TEST(Listener, TrainingRaisesScoreOfObservedProgram) {
  const ListenerSnapshot base(small_listener());
  const Specification spec{{"ab", true}};
  const Dataset data{{P("a+b*"), spec}};
  const double before = listener_score(base, P("a+b*"), spec);
  const auto trained = train_listener(base, data, {}, 1);
  EXPECT_GT(listener_score(trained, P("a+b*"), spec), before);
  EXPECT_EQ(trained.version(), 1);
  EXPECT_EQ(base.weights(), ListenerSnapshot(small_listener()).weights());  // input untouched
}

TEST(Listener, TrainingIsDeterministicAndLowersNll) {
  const ListenerSnapshot base(small_listener());
  Rng rng(5);
  Dataset data;
  for (const char* text : {"a+b*", "ab?c", "(a|b)c*", "a{2}b", "c+"}) {
    const auto p = P(text);
    data.push_back({p, sample_random_spec(p, 4, rng, {"abc", 6})});
  }
  const TrainConfig cfg{5, 0.1, 9, true};
  const auto a = train_listener(base, data, cfg, 1);
  const auto b = train_listener(base, data, cfg, 1);
  EXPECT_EQ(a, b);
  EXPECT_LT(listener_nll(a, data, true), listener_nll(base, data, true));
  TrainConfig zero = cfg;
  zero.lr = 0.0;
  EXPECT_EQ(train_listener(base, data, zero, 0), base);
}

TEST(Listener, TrainingRejectsInconsistentOrEmptyData) {
  const ListenerSnapshot base(small_listener());
  EXPECT_THROW(train_listener(base, {}, {}, 1), DegenerateData);
  EXPECT_THROW(train_listener(base, {{P("a"), Specification{{"b", true}}}}, {}, 1), DegenerateData);
}

TEST(Listener, ProposeIsDistinctBoundedAndDeterministic) {
  const ListenerSnapshot snap(small_listener());
  Rng a(7), b(7);
  const auto x = listener_propose(snap, {}, 10, a);
  const auto y = listener_propose(snap, {}, 10, b);
  ASSERT_EQ(x.size(), y.size());
  EXPECT_EQ(x.size(), 10u);
  std::set<std::string> texts;
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(x[i].program.text(), y[i].program.text());
    EXPECT_EQ(x[i].log_score, y[i].log_score);
    EXPECT_LE(x[i].program.size(), 10u);
    EXPECT_NEAR(x[i].log_score, listener_score(snap, x[i].program, {}), 1e-9);
    texts.insert(x[i].program.text());
  }
  EXPECT_EQ(texts.size(), x.size());
}

TEST(Listener, NamedWeightsPartitionTheVector) {
  const ListenerSnapshot snap(small_listener());
  EXPECT_EQ(snap.grammar_weights().size() + snap.spec_feature_weights().size(), snap.weights().size());
  EXPECT_TRUE(snap.grammar_weights().count("lit/top/'a'"));
  EXPECT_TRUE(snap.spec_feature_weights().count("quant.spec/+/pos_zero"));
}

TEST(Speaker, ProposalsAreConsistentNewAndDeterministic) {
  const SpeakerSnapshot snap(small_speaker());
  const auto p = P("a+b*");
  Rng a(1), b(1);
  const auto x = speaker_propose(snap, p, {}, 50, a);
  const auto y = speaker_propose(snap, p, {}, 50, b);
  EXPECT_EQ(x.size(), 50u);
  ASSERT_EQ(x.size(), y.size());
  std::set<std::string> texts;
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_TRUE(is_consistent(p, x[i].example)) << x[i].example.text;
    EXPECT_EQ(x[i].example, y[i].example);
    texts.insert(x[i].example.text);
  }
  EXPECT_EQ(texts.size(), x.size());
}

TEST(Speaker, ProposalsSkipExamplesAlreadyGiven) {
  const SpeakerSnapshot snap(small_speaker());
  Rng rng(2);
  const Specification partial{{"aaa", true}};
  for (int i = 0; i < 20; ++i)
    for (const auto& e : speaker_propose(snap, P("a{3}"), partial, 5, rng)) EXPECT_NE(e.example.text, "aaa");
}

TEST(Speaker, ArgmaxSurvivesPositiveRescaling) {
  const SpeakerSnapshot base(small_speaker());
  const auto w = random_weights(base.weights().size(), 11);
  auto scaled = w;
  for (auto& x : scaled) x *= 2.5;
  const SpeakerSnapshot a(small_speaker(), w, 0.3, 0), b(small_speaker(), scaled, 0.75, 0);
  const auto p = P("(ab)+c?");
  const Specification partial{{"ab", true}};
  Rng rng(4);
  const auto cands = models::CandidateSource(p, small_speaker().space).draw(40, partial, rng);
  auto argmax = [&](const SpeakerSnapshot& s) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < cands.size(); ++i)
      if (speaker_score(s, cands[i], p, partial) > speaker_score(s, cands[best], p, partial)) best = i;
    return best;
  };
  EXPECT_EQ(argmax(a), argmax(b));
  double z = 0.0;
  std::vector<double> s;
  for (const auto& e : cands) s.push_back(speaker_score(a, e, p, partial));
  const double lse = models::log_sum_exp(s);
  for (double x : s) z += std::exp(x - lse);
  EXPECT_NEAR(z, 1.0, 1e-9);
}

TEST(Speaker, TrainingLowersNllAndIsReproducible) {
  const SpeakerSnapshot base(small_speaker());
  // Short, contrastive specs, unlike the speaker's uniform proposals.
  const Dataset data{{P("a+b*"), Specification{{"a", true}, {"b", false}, {"abb", true}}},
                     {P("(ab)*"), Specification{{"", true}, {"a", false}, {"abab", true}}},
                     {P("c?a"), Specification{{"a", true}, {"ca", true}, {"cca", false}}}};
  const double before = speaker_nll(base, data);
  EXPECT_GE(before, 0.0);
  const auto trained = train_speaker(base, data, {}, 1);
  EXPECT_LT(speaker_nll(trained, data), before);
  EXPECT_EQ(trained, train_speaker(base, data, {}, 1));
  EXPECT_EQ(speaker_nll(trained, data), speaker_nll(trained, data));
  TrainConfig zero;
  zero.lr = 0.0;
  EXPECT_EQ(train_speaker(base, data, zero, 0), base);
}

}  // namespace
}  // namespace prax
