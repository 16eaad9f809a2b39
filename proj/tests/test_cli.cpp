#include <gtest/gtest.h>

#include <array>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>

#include "prax/io/formats.hpp"

namespace {

namespace fs = std::filesystem;
using prax::io::json;
using prax::io::read_file;

const std::string kToy = std::string(PRAX_CONFIG_DIR) + "/toy.toml";
const std::string kHuman = std::string(PRAX_FIXTURE_DIR) + "/human_valid.jsonl";

struct Run {
  int status;
  std::string out;
};

// stdout only; stderr carries progress lines.
Run prax(const std::string& args) {
  const std::string cmd = std::string(PRAX_BIN) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, ""};
  std::string out;
  std::array<char, 4096> buf{};
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
  const int st = pclose(pipe);
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, out};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("prax_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

// Every regular file under root except the wall-clock timings, keyed by relative path.
std::map<std::string, std::string> snapshot_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().filename() != "timing.json") files[fs::relative(e.path(), root).string()] = read_file(e.path());
  return files;
}

void full_pipeline(const fs::path& out) {
  const std::string common = "--config " + kToy + " --out " + out.string();
  ASSERT_EQ(prax("train " + common).status, 0);
  ASSERT_EQ(prax("generate " + common + " --ckpt round1 --base base --programs 6").status, 0);
  ASSERT_EQ(prax("eval " + common).status, 0);
}

TEST(Cli, SampleIsDeterministicPerSeed) {
  const auto a = prax("sample --programs 10 --seed 7");
  const auto b = prax("sample --programs 10 --seed 7");
  const auto c = prax("sample --programs 10 --seed 8");
  ASSERT_EQ(a.status, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);
  EXPECT_EQ(std::count(a.out.begin(), a.out.end(), '\n'), 10);
}

TEST(Cli, SampleWithSpecsEmitsConsistentJsonl) {
  const auto r = prax("sample --config " + kToy + " --programs 8 --specs 3");
  ASSERT_EQ(r.status, 0);
  const auto data = prax::io::dataset_from_jsonl(r.out, "stdout");
  EXPECT_EQ(data.size(), 8u);
}

TEST(Cli, TrainWritesHistoryAndSelectsArgmax) {
  const auto out = scratch("train");
  ASSERT_EQ(prax("train --config " + kToy + " --out " + out.string()).status, 0);
  for (const char* f : {"config.toml", "summary.json", "base/listener.json", "base/speaker.json", "base/metrics.json", "base/dataset.jsonl",
                        "round0/dataset.jsonl", "round0/listener.json", "round0/timing.json", "round1/metrics.json"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  EXPECT_FALSE(fs::exists(out / "round2"));
  const auto s = json::parse(read_file(out / "summary.json"));
  double best = -1;
  int arg = -1;
  for (const auto& v : s.at("versions"))
    if (v.at("top1").get<double>() > best) best = v.at("top1").get<double>(), arg = v.at("version").get<int>();
  EXPECT_EQ(s.at("selected_version").get<int>(), arg);
  EXPECT_EQ(prax("inspect " + out.string()).status, 0);
}

TEST(Cli, ReplayEvalOnHumanFixtureWritesReport) {
  const auto out = scratch("replay");
  const std::string common = "--config " + kToy + " --out " + out.string();
  ASSERT_EQ(prax("train " + common).status, 0);
  const auto r = prax("eval " + common + " --mode replay --data " + kHuman + " --ckpt round1");
  ASSERT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("Top-1"), std::string::npos);
  const auto report = json::parse(read_file(out / "eval" / "report.json"));
  EXPECT_EQ(report.at("n_traces").get<int>(), 12);
  const auto traces = prax::io::traces_from_jsonl(read_file(out / "eval" / "traces.jsonl"));
  ASSERT_EQ(traces.size(), 12u);
  for (const auto& t : traces) EXPECT_EQ(t.source, prax::TraceSource::ReplayedHuman);
}

TEST(Cli, PipelineIsByteIdenticalAcrossReruns) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  full_pipeline(a);
  full_pipeline(b);
  const auto ta = snapshot_tree(a), tb = snapshot_tree(b);
  ASSERT_EQ(ta.size(), tb.size());
  for (const auto& [name, bytes] : ta) {
    ASSERT_TRUE(tb.count(name)) << name;
    EXPECT_EQ(bytes, tb.at(name)) << name;
  }
  EXPECT_TRUE(ta.count("dataset.jsonl"));
  EXPECT_TRUE(ta.count("eval/report.json"));
}

TEST(Cli, ResumeMatchesUninterruptedTraining) {
  const auto full = scratch("resume_full"), part = scratch("resume_part");
  ASSERT_EQ(prax("train --config " + kToy + " --out " + full.string()).status, 0);
  fs::create_directories(part);
  fs::copy(full, part, fs::copy_options::recursive);
  fs::remove_all(part / "round1");
  fs::remove(part / "summary.json");
  ASSERT_EQ(prax("train --resume --config " + kToy + " --out " + part.string()).status, 0);
  EXPECT_EQ(snapshot_tree(full), snapshot_tree(part));
  // A different seed changes the config, which must not be resumed into.
  EXPECT_EQ(prax("train --resume --seed 99 --config " + kToy + " --out " + part.string()).status, 2);
}

TEST(Cli, ErrorsExitNonZero) {
  EXPECT_NE(prax("").status, 0);
  EXPECT_NE(prax("frobnicate").status, 0);
  EXPECT_NE(prax("eval --ckpt " + scratch("missing").string() + "/nothing.json").status, 0);
  EXPECT_EQ(prax("inspect " + kHuman).status, 0);
}

}  // namespace
