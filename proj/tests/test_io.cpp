#include <gtest/gtest.h>

#include <filesystem>

#include "prax/io/config.hpp"
#include "prax/io/experiment.hpp"
#include "prax/io/formats.hpp"
#include "prax/io/history.hpp"

namespace prax::io {
namespace {

namespace fs = std::filesystem;

RegexProgram P(std::string_view s) { return RegexProgram::parse(s); }

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("prax_test_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ListenerSettings small_listener() {
  ListenerSettings s;
  s.literals = "abc";
  s.classes = {CharClass::Digit};
  s.max_tokens = 8;
  s.max_arity = 3;
  s.max_repeat = 3;
  s.max_depth = 3;
  return s;
}

std::vector<double> random_weights(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> w(n);
  for (auto& x : w) x = (rng.uniform() - 0.5) * 1e3 / 7.0;
  return w;
}

TEST(Toml, ParsesTheSubset) {
  const auto t = parse_toml(R"(seed = 7  # run seed
[a]
s = "x\"y\\z"
lit = 'raw\n'
n = -1_000
f = 2.5e-1
b = true
arr = ["p", 'q' , "r"]
)");
  EXPECT_EQ(std::get<std::int64_t>(t.at("").at("seed").v), 7);
  EXPECT_EQ(std::get<std::string>(t.at("a").at("s").v), "x\"y\\z");
  EXPECT_EQ(std::get<std::string>(t.at("a").at("lit").v), "raw\\n");
  EXPECT_EQ(std::get<std::int64_t>(t.at("a").at("n").v), -1000);
  EXPECT_EQ(std::get<double>(t.at("a").at("f").v), 0.25);
  EXPECT_EQ(std::get<bool>(t.at("a").at("b").v), true);
  EXPECT_EQ(std::get<std::vector<std::string>>(t.at("a").at("arr").v), (std::vector<std::string>{"p", "q", "r"}));
}

TEST(Toml, ErrorsNameTheLine) {
  for (const char* bad : {"[a]\nx = ", "[a]\nx = \"open", "[a]\nx = 1 2", "[a\n", "[a]\nx = 1\nx = 2", "[a]\nx = [1]",
                          "[a]\nBad = 1", "[a]\nx = 12abc"}) {
    try {
      parse_toml(bad);
      ADD_FAILURE() << bad;
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find("line "), std::string::npos) << e.what();
    }
  }
}

TEST(Config, CanonicalFormRoundTrips) {
  Config c;
  c.seed = 99;
  c.domain.medium.classes = {CharClass::Digit, CharClass::Space};
  c.listener.literals = "a\"b\\c";
  c.bootstrap.listener_train.lr = 0.1;
  c.base_train.lr = 1.0 / 3.0;
  c.serve.free_play = true;
  const auto text = to_toml(c);
  const Config back = config_from_toml(text);
  EXPECT_EQ(to_toml(back), text);
  EXPECT_EQ(back.listener, c.listener);
  EXPECT_EQ(back.base_train.lr, 1.0 / 3.0);
  EXPECT_EQ(back.serve, c.serve);
  EXPECT_EQ(config_hash(back), config_hash(c));
  c.seed = 100;
  EXPECT_NE(config_hash(back), config_hash(c));
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(config_from_toml("[bootstrap]\nrounds = 3"), ConfigError);
  EXPECT_THROW(config_from_toml("[training]\nepochs = 3"), ConfigError);
  EXPECT_THROW(config_from_toml("[bootstrap]\nk = \"many\""), ConfigError);
  EXPECT_THROW(config_from_toml("[bootstrap]\nk = 0"), ConfigError);
  EXPECT_THROW(config_from_toml("[sampler]\nclasses = [\"vowel\"]"), ConfigError);
  EXPECT_THROW(config_from_toml("seed = -1"), ConfigError);
  const auto c = config_from_toml("[bootstrap]\nepochs = 2\nlr = 1\n[models]\ntrain_seed = 4");
  EXPECT_EQ(c.bootstrap.speaker_train.epochs, 2);
  EXPECT_EQ(c.bootstrap.speaker_train.lr, 1.0);
  EXPECT_EQ(c.bootstrap.listener_train.seed, 4u);
  EXPECT_FALSE(c.base_train.prefixes);
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* name : {"toy.toml", "desk.toml", "full.toml"}) {
    const auto c = load_config(std::string(PRAX_CONFIG_DIR) + "/" + name);
    EXPECT_NO_THROW(c.validate()) << name;
  }
  const auto full = load_config(std::string(PRAX_CONFIG_DIR) + "/full.toml");
  EXPECT_EQ(full.bootstrap.rsa.n_per_model, 250);
  EXPECT_EQ(full.bootstrap.rsa.n_examples_max, 10);
  EXPECT_EQ(full.bootstrap.r_max, 20);
  EXPECT_EQ(full.bootstrap.k, 1024);
  EXPECT_EQ(full.eval.n_samples, 500);
  EXPECT_EQ(full.base_data.specs_per_program, 3);
  EXPECT_EQ(full.base_data.max_spec_len, 15);
}

TEST(Dataset, JsonlRoundTrip) {
  const Dataset data{{P("a+b*"), {{"ab", true}, {"", false}, {"a\"\\\n\t\u0001", false}}, "pragmatic", 3},
                     {P("\\d{2,3}"), {}, "literal", std::nullopt},
                     {P("(a|b)c"), {{"bc", true}}, "human", std::nullopt}};
  const auto text = dataset_to_jsonl(data);
  EXPECT_EQ(dataset_from_jsonl(text), data);
  EXPECT_EQ(dataset_to_jsonl(dataset_from_jsonl(text)), text);
  EXPECT_NE(text.find(R"({"meta":{"round":3,"source":"pragmatic"},"program":"a+b*","spec":[["ab",true])"), std::string::npos);
}

TEST(Dataset, LoadValidatesEachLine) {
  EXPECT_THROW(dataset_from_jsonl(R"({"program":"a","spec":[["b",true]]})"), FormatError);
  EXPECT_THROW(dataset_from_jsonl(R"({"program":"a(","spec":[]})"), FormatError);
  EXPECT_THROW(dataset_from_jsonl(R"({"program":"a","spec":[["a",true],["a",true]]})"), FormatError);
  EXPECT_THROW(dataset_from_jsonl(R"({"program":"a","spec":[["a",1]]})"), FormatError);
  EXPECT_THROW(dataset_from_jsonl("not json"), FormatError);
  try {
    dataset_from_jsonl("{\"program\":\"a\",\"spec\":[]}\n\n{\"program\":\"a\",\"spec\":[[\"b\",true]]}", "f.jsonl");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("f.jsonl:3"), std::string::npos) << e.what();
  }
}

TEST(Dataset, HumanFixtureLoads) {
  const auto data = load_dataset(std::string(PRAX_FIXTURE_DIR) + "/human_valid.jsonl");
  EXPECT_GE(data.size(), 10u);
  for (const auto& d : data) EXPECT_TRUE(is_consistent(d.program, d.spec));
}

TEST(Checkpoint, ListenerRoundTripIsBitExact) {
  const ListenerSnapshot shape(small_listener());
  const auto snap = shape.with_weights(random_weights(shape.weights().size(), 5), 3);
  const CheckpointMeta meta{3, 2, 42, "00ff"};
  const auto j = checkpoint_json(snap, meta);
  const auto back = listener_from_json(json::parse(j.dump()));
  EXPECT_EQ(back.snapshot, snap);
  EXPECT_EQ(back.meta, meta);
  EXPECT_EQ(checkpoint_json(back.snapshot, back.meta).dump(), j.dump());
}

TEST(Checkpoint, SpeakerRoundTripIsBitExact) {
  SpeakerSettings ss;
  ss.space = {"ab", 5};
  const SpeakerSnapshot shape(ss);
  const SpeakerSnapshot snap(ss, random_weights(shape.weights().size(), 6), -0.1234567890123, 7);
  const CheckpointMeta meta{7, std::nullopt, 1, "x"};
  const auto back = speaker_from_json(json::parse(checkpoint_json(snap, meta).dump(2)));
  EXPECT_EQ(back.snapshot, snap);
  EXPECT_EQ(back.meta, meta);
}

TEST(Checkpoint, RejectsMismatches) {
  const ListenerSnapshot snap(small_listener());
  auto j = checkpoint_json(snap, {});
  EXPECT_THROW(speaker_from_json(j), FormatError);
  auto missing = j;
  missing["weights"].erase(missing["weights"].begin());
  EXPECT_THROW(listener_from_json(missing), FormatError);
  auto other = j;
  other["settings"]["literals"] = "xyz";
  EXPECT_THROW(listener_from_json(other), FormatError);
  auto wrong = j;
  wrong["format"] = "prax.checkpoint/0";
  EXPECT_THROW(listener_from_json(wrong), FormatError);
}

TEST(Trace, JsonRoundTrip) {
  InteractionTrace t{P("a{2}"), {}, 2, TraceSource::LiveSession, 0xfedcba9876543210ULL};
  t.turns.push_back({{"aa", true}, {{P("aa*"), -1.25}, {P("a+"), -3.0000000000000004}}});
  t.turns.push_back({{"a", false}, {{P("a{2}"), -0.1}}});
  const auto text = traces_to_jsonl({t, InteractionTrace{}});
  const auto back = traces_from_jsonl(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(traces_to_jsonl(back), text);
  EXPECT_EQ(back[0].seed, t.seed);
  EXPECT_EQ(back[0].success_turn, std::optional<int>(2));
  EXPECT_EQ(back[0].turns[0].guesses[1].log_score, -3.0000000000000004);
  EXPECT_EQ(compute_metrics(back), compute_metrics({t, InteractionTrace{}}));
  EXPECT_THROW(traces_from_jsonl(R"({"schema":"other"})"), FormatError);
}

TEST(Report, JsonRoundTrip) {
  InteractionTrace t{P("a"), {}, std::nullopt, TraceSource::Simulated, 0};
  t.turns.push_back({{"a", true}, {{P("b"), -1.0}}});
  t.turns.push_back({{"b", false}, {{P("a"), -1.0}}});
  InteractionTrace u = t;
  u.target = P("c");
  const auto r = compute_metrics({t, u, t}, 50, 3);
  EXPECT_EQ(report_from_json(json::parse(to_json(r).dump())), r);
}

TEST(History, SaveLoadAndResolve) {
  const auto root = scratch("history");
  SpeakerSettings ss;
  ss.space = {"ab", 4};
  const Snapshots base{ListenerSnapshot(small_listener()), SpeakerSnapshot(ss)};
  RoundRecord rec;
  rec.round = 0;
  rec.programs = {"a+", "b"};
  rec.dataset = {{P("a+"), {{"aa", true}}, "pragmatic", 0}};
  rec.listener = base.listener.with_weights(random_weights(base.listener.weights().size(), 1), 1);
  rec.speaker = SpeakerSnapshot(ss, random_weights(base.speaker.weights().size(), 2), 0.5, 1);
  rec.validation.top1 = 0.25;
  rec.seed = 77;
  rec.wall_time = 1.5;
  MetricReport bv;
  bv.top1 = 0.125;
  save_base(root, base, {0, std::nullopt, 1, "h"}, bv);
  save_round(root, rec, {1, std::nullopt, 1, "h"});
  const auto h = load_history(root);
  EXPECT_EQ(h.base.listener, base.listener);
  EXPECT_EQ(h.base.speaker, base.speaker);
  EXPECT_EQ(h.base_validation, std::optional<MetricReport>(bv));
  ASSERT_EQ(h.rounds.size(), 1u);
  EXPECT_EQ(h.rounds[0].dataset, rec.dataset);
  EXPECT_EQ(h.rounds[0].listener, rec.listener);
  EXPECT_EQ(h.rounds[0].speaker, rec.speaker);
  EXPECT_EQ(h.rounds[0].programs, rec.programs);
  EXPECT_EQ(h.rounds[0].validation, rec.validation);
  EXPECT_EQ(h.rounds[0].seed, 77u);
  EXPECT_EQ(h.rounds[0].wall_time, 1.5);
  EXPECT_EQ(load_listener(round_dir(root, 0) / "listener.json").meta.round, std::optional<int>(0));
  EXPECT_EQ(resolve_checkpoint("round0", root), root / "round0" / "listener.json");
  EXPECT_EQ(resolve_checkpoint((root / "base").string(), "."), root / "base" / "listener.json");
  EXPECT_EQ(resolve_checkpoint("base", root, "speaker"), root / "base" / "speaker.json");
  EXPECT_THROW(resolve_checkpoint("round9", root), FormatError);
}

TEST(Experiment, HeldOutProgramsAreExcludedFromTraining) {
  Config c = load_config(std::string(PRAX_CONFIG_DIR) + "/toy.toml");
  const Experiment e(c);
  EXPECT_EQ(e.held_out().size(), static_cast<std::size_t>(c.validation.programs));
  Dataset data;
  e.train_base(&data);
  for (const auto& d : data) EXPECT_FALSE(e.excluded().count(d.program.text())) << d.program.text();
  const Experiment again(c);
  for (std::size_t i = 0; i < e.held_out().size(); ++i) EXPECT_EQ(e.held_out()[i], again.held_out()[i]);
}

}  // namespace
}  // namespace prax::io
