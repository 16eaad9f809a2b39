// prax: train, generate, evaluate and serve pragmatic regex synthesizers.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "prax/io/config.hpp"
#include "prax/io/experiment.hpp"
#include "prax/io/formats.hpp"
#include "prax/io/history.hpp"
#include "prax/io/service.hpp"

namespace fs = std::filesystem;
using namespace prax;
using namespace prax::io;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "prax-out";
  std::string log_level = "warn";
};

Config load(const Globals& g) {
  Config c = g.config.empty() ? Config{} : load_config(g.config);
  if (g.seed) c.seed = *g.seed;
  return c;
}

CheckpointMeta meta_for(const Config& c) { return {0, std::nullopt, c.seed, config_hash(c)}; }

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

// ---- train ----------------------------------------------------------------

int cmd_train(const Globals& g, bool resume) {
  const Config cfg = load(g);
  const fs::path out = g.out;
  const Experiment ex(cfg);
  const auto meta = meta_for(cfg);
  TrainingHooks hooks;
  Snapshots base;
  if (resume && fs::exists(out / "base" / "listener.json")) {
    if (fs::exists(out / "config.toml") && read_file(out / "config.toml") != to_toml(cfg))
      throw ConfigError("cannot resume: " + (out / "config.toml").string() + " differs from the current config");
    auto h = load_history(out);
    base = std::move(h.base);
    hooks.base_validation = std::move(h.base_validation);
    hooks.completed = std::move(h.rounds);
    std::cerr << "resuming after " << hooks.completed.size() << " completed rounds\n";
  } else {
    write_file(out / "config.toml", to_toml(cfg));
    Dataset literal;
    base = ex.train_base(&literal);
    save_dataset(out / "base" / "dataset.jsonl", literal);
    save_base(out, base, meta, std::nullopt);
  }
  if (!hooks.base_validation) {
    hooks.base_validation = ex.validator()(base.listener);
    save_base(out, base, meta, hooks.base_validation);
  }
  std::cerr << "version 0 (base): " << cfg.bootstrap.selection_metric << " = "
            << fmt(metric_value(*hooks.base_validation, cfg.bootstrap.selection_metric)) << "\n";
  hooks.on_round = [&](const RoundRecord& rec) {
    save_round(out, rec, meta);
    std::cerr << "round " << rec.round << ": " << rec.dataset.size() << " specs, " << cfg.bootstrap.selection_metric << " = "
              << fmt(metric_value(rec.validation, cfg.bootstrap.selection_metric)) << "\n";
  };
  const auto res = ex.train(base, std::move(hooks));
  save_summary(out, res, cfg.bootstrap.selection_metric);
  std::cout << "selected version " << res.selected << " ("
            << (res.selected == 0 ? std::string("base") : "round" + std::to_string(res.selected - 1)) << ")\n";
  std::cout << "history written to " << out.string() << "\n";
  return 0;
}

// ---- generate ---------------------------------------------------------------

int cmd_generate(const Globals& g, const std::string& ckpt, const std::string& base_arg, const std::string& history, int n,
                 bool literal) {
  const Config cfg = load(g);
  const Experiment ex(cfg);
  const fs::path root = history.empty() ? fs::path(g.out) : fs::path(history);
  std::unordered_set<std::string> used = ex.excluded();
  Rng rng(ex.seed("generate"));
  const int count = n > 0 ? n : cfg.bootstrap.k;
  const auto programs = draw_fresh_programs(ex.source(), count, used, rng);
  Dataset data;
  if (literal) {
    data = literal_dataset(programs, cfg.base_data, cfg.speaker.space, ex.seed("generate-literal"));
  } else {
    std::vector<ListenerSnapshot> listeners;
    std::vector<SpeakerSnapshot> speakers;
    if (!base_arg.empty()) {
      listeners.push_back(load_listener(resolve_checkpoint(base_arg, root)).snapshot);
      speakers.push_back(load_speaker(resolve_checkpoint(base_arg, root, "speaker")).snapshot);
    }
    listeners.push_back(load_listener(resolve_checkpoint(ckpt, root)).snapshot);
    speakers.push_back(load_speaker(resolve_checkpoint(ckpt, root, "speaker")).snapshot);
    for (std::size_t i = 0; i < programs.size(); ++i) {
      Rng prng(derive_seed(ex.seed("generate-spec"), i));
      Specification spec;
      try {
        spec = generate_pragmatic_spec(programs[i], listeners, speakers, cfg.bootstrap.rsa, prng);
      } catch (const std::exception& e) {
        log(LogLevel::Warn, "dropping " + programs[i].text() + ": " + e.what());
        continue;
      }
      if (!spec.empty()) data.push_back({programs[i], std::move(spec), "pragmatic", std::nullopt});
    }
  }
  for (const auto& d : data)
    if (!is_consistent(d.program, d.spec)) throw std::logic_error("generated an inconsistent pair for " + d.program.text());
  const fs::path path = fs::path(g.out) / "dataset.jsonl";
  save_dataset(path, data);
  std::cout << data.size() << " pairs written to " << path.string() << "\n";
  return 0;
}

// ---- eval -------------------------------------------------------------------

std::string default_checkpoint(const fs::path& root) {
  if (fs::exists(root / "summary.json")) return json::parse(read_file(root / "summary.json")).at("selected_dir").get<std::string>();
  return "base";
}

int cmd_eval(const Globals& g, const std::string& mode, const std::string& data, const std::string& ckpt, const std::string& history) {
  const Config cfg = load(g);
  const fs::path root = history.empty() ? fs::path(g.out) : fs::path(history);
  const auto path = resolve_checkpoint(ckpt.empty() ? default_checkpoint(root) : ckpt, root);
  const auto listener = load_listener(path).snapshot;
  std::vector<InteractionTrace> traces;
  Experiment ex(cfg);
  if (mode == "replay") {
    const std::string file = data.empty() ? cfg.validation.data : data;
    if (file.empty()) throw ConfigError("replay needs --data or validation.data");
    traces = replay_eval(listener, load_dataset(file), cfg.eval, ex.seed("eval"));
    if (traces.empty()) throw FormatError(file + " has no consistent records");
  } else {
    traces = ex.simulate(listener);
  }
  const auto report = compute_metrics(traces, cfg.resamples, ex.seed("eval-resample"));
  const fs::path out = fs::path(g.out) / "eval";
  write_file(out / "traces.jsonl", traces_to_jsonl(traces));
  write_file(out / "report.json", to_json(report).dump(2) + "\n");
  const auto table = format_report(report, "v" + std::to_string(listener.version()));
  write_file(out / "report.txt", table);
  std::cout << "checkpoint " << path.string() << ", mode " << mode << "\n\n" << table;
  return 0;
}

// ---- sample -----------------------------------------------------------------

int cmd_sample(const Globals& g, int n, int specs) {
  const Config cfg = load(g);
  const ProgramDistribution dist(cfg.domain);
  Rng rng(derive_seed(cfg.seed, stable_hash("sample")));
  for (int i = 0; i < n; ++i) {
    const auto p = dist(rng);
    if (specs < 0) {
      std::cout << p.text() << "\n";
      continue;
    }
    Rng srng(derive_seed(cfg.seed, stable_hash("sample-spec"), static_cast<std::uint64_t>(i)));
    try {
      const DatasetEntry d{p, sample_random_spec(p, specs, srng, cfg.speaker.space), "literal", std::nullopt};
      std::cout << to_json(d).dump() << "\n";
    } catch (const EmptyLanguage&) {
      log(LogLevel::Warn, "no examples for " + p.text());
    }
  }
  return 0;
}

// ---- serve ------------------------------------------------------------------

httplib::Server* g_server = nullptr;

int cmd_serve(const Globals& g, const std::vector<std::string>& ckpts, const std::string& history, int port_arg) {
  const Config cfg = load(g);
  const fs::path root = history.empty() ? fs::path(g.out) : fs::path(history);
  GameService::Options opt;
  opt.eval = cfg.eval;
  opt.free_play = cfg.serve.free_play;
  opt.show_top10 = cfg.serve.show_top10;
  opt.target_max_tokens = cfg.serve.target_max_tokens;
  opt.trace_log = cfg.serve.trace_log.empty() ? fs::path() : fs::path(g.out) / cfg.serve.trace_log;
  opt.seed = derive_seed(cfg.seed, stable_hash("serve"));
  const ProgramDistribution dist(cfg.domain);
  GameService service([&dist](Rng& rng) { return dist(rng); }, opt);
  std::vector<std::string> args = ckpts;
  if (args.empty()) args.push_back(default_checkpoint(root));
  for (const auto& a : args) {
    const auto eq = a.find('=');
    const std::string id = eq == std::string::npos ? fs::path(a).filename().stem().string() : a.substr(0, eq);
    const std::string where = eq == std::string::npos ? a : a.substr(eq + 1);
    service.set_snapshot(id == "listener" ? fs::path(a).parent_path().filename().string() : id,
                         load_listener(resolve_checkpoint(where, root)).snapshot);
  }
  int port = cfg.serve.port;
  if (const char* env = std::getenv("PRAX_PORT")) port = std::stoi(env);
  if (port_arg >= 0) port = port_arg;
  httplib::Server server;
  service.mount(server);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  if (port == 0) port = server.bind_to_any_port(cfg.serve.host);
  else if (!server.bind_to_port(cfg.serve.host, port)) throw std::runtime_error("cannot bind " + cfg.serve.host + ":" + std::to_string(port));
  std::cout << "listening on http://" << cfg.serve.host << ":" << port << std::endl;
  server.listen_after_bind();
  return 0;
}

// ---- inspect ----------------------------------------------------------------

int inspect_checkpoint(const json& j) {
  const std::string kind = j.value("kind", "");
  std::cout << "kind:        " << kind << "\n"
            << "version:     " << j.at("version") << "\n"
            << "round:       " << j.at("round") << "\n"
            << "seed:        " << j.at("seed") << "\n"
            << "config hash: " << j.at("config_hash").get<std::string>() << "\n"
            << "settings:    " << j.at("settings").dump() << "\n";
  std::map<std::string, double> w;
  if (kind == "listener") {
    const auto snap = listener_from_json(j).snapshot;
    std::cout << "weights:     " << snap.weights().size() << "\n";
    w = snap.spec_feature_weights();
  } else {
    const auto snap = speaker_from_json(j).snapshot;
    std::cout << "weights:     " << snap.weights().size() << "\npolarity:    " << snap.polarity_bias() << "\n";
    w = snap.example_feature_weights();
  }
  std::vector<std::pair<std::string, double>> top(w.begin(), w.end());
  std::stable_sort(top.begin(), top.end(), [](const auto& a, const auto& b) { return std::abs(a.second) > std::abs(b.second); });
  std::cout << "\nlargest " << (kind == "listener" ? "spec-feature" : "example-feature") << " weights:\n";
  for (std::size_t i = 0; i < top.size() && i < 15; ++i) std::printf("  %+9.4f  %s\n", top[i].second, top[i].first.c_str());
  return 0;
}

int inspect_dataset(const Dataset& data) {
  std::map<std::string, int> sources;
  std::map<std::string, int> rounds;
  std::size_t examples = 0, positives = 0;
  for (const auto& d : data) {
    ++sources[d.source];
    ++rounds[d.round ? std::to_string(*d.round) : "-"];
    examples += d.spec.size();
    for (const auto& e : d.spec) positives += e.label ? 1 : 0;
  }
  std::cout << "records:          " << data.size() << "\n";
  std::cout << "mean spec length: " << fmt(data.empty() ? 0.0 : static_cast<double>(examples) / static_cast<double>(data.size())) << "\n";
  std::cout << "positive share:   " << fmt(examples ? static_cast<double>(positives) / static_cast<double>(examples) : 0.0) << "\n";
  for (const auto& [s, n] : sources) std::cout << "source " << s << ": " << n << "\n";
  for (const auto& [r, n] : rounds) std::cout << "round " << r << ": " << n << "\n";
  return 0;
}

int cmd_inspect(const std::string& target) {
  const fs::path p = target;
  if (fs::is_directory(p)) {
    if (!fs::exists(p / "summary.json")) {
      const auto h = load_history(p);
      std::cout << "base plus " << h.rounds.size() << " completed rounds (no summary yet)\n";
      return 0;
    }
    const auto s = json::parse(read_file(p / "summary.json"));
    const std::string metric = s.at("selection_metric").get<std::string>();
    std::cout << "version  dir      " << metric << "\n";
    for (const auto& v : s.at("versions")) {
      const int ver = v.at("version").get<int>();
      const std::string dir = ver == 0 ? "base" : "round" + std::to_string(ver - 1);
      std::printf("%7d  %-7s  %.3f%s\n", ver, dir.c_str(), v.at(metric).get<double>(), ver == s.at("selected_version").get<int>() ? "  *" : "");
    }
    return 0;
  }
  const std::string text = read_file(p);
  if (p.extension() == ".jsonl") {
    const auto first = json::parse(text.substr(0, text.find('\n')));
    if (first.value("schema", "") == kTraceSchema) {
      const auto traces = traces_from_jsonl(text);
      std::cout << traces.size() << " traces\n\n" << format_report(compute_metrics(traces), "traces");
      return 0;
    }
    return inspect_dataset(dataset_from_jsonl(text, p.string()));
  }
  const auto j = json::parse(text);
  if (j.value("format", "") == kCheckpointFormat) return inspect_checkpoint(j);
  if (j.value("schema", "") == kReportSchema) {
    std::cout << format_report(report_from_json(j));
    return 0;
  }
  if (j.contains("validation")) {
    std::cout << format_report(report_from_json(j["validation"]));
    return 0;
  }
  throw FormatError("unrecognized file " + p.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pragmatic regex synthesis: training, data generation, evaluation and the game service."};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "TOML config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "overrides the config seed");
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.add_option("--log-level", g.log_level, "debug, info, warn or off")
      ->check(CLI::IsMember({"debug", "info", "warn", "off"}))
      ->capture_default_str();

  bool resume = false;
  auto* train = app.add_subcommand("train", "run base training and the bootstrap rounds; writes a round history");
  train->add_flag("--resume", resume, "continue from the completed rounds in --out");

  std::string ckpt, base_ckpt, history, data, mode = "simulate";
  int n_programs = 0;
  bool literal = false;
  auto* generate = app.add_subcommand("generate", "emit a dataset of pragmatic (or random) specifications");
  generate->add_option("--ckpt", ckpt, "current listener/speaker: file, directory, or history name such as round4");
  generate->add_option("--base", base_ckpt, "base listener/speaker added to the candidate pools");
  generate->add_option("--history", history, "directory for resolving checkpoint names (default: --out)");
  generate->add_option("--programs", n_programs, "number of programs (default: bootstrap.k)");
  generate->add_flag("--literal", literal, "random specifications instead of pragmatic ones");

  auto* eval = app.add_subcommand("eval", "simulate or replay interactions and report metrics");
  eval->add_option("--mode", mode, "simulate or replay")->check(CLI::IsMember({"simulate", "replay"}))->capture_default_str();
  eval->add_option("--data", data, "recorded specifications for replay")->check(CLI::ExistingFile);
  eval->add_option("--ckpt", ckpt, "listener: file, directory, or history name (default: selected version)");
  eval->add_option("--history", history, "directory for resolving checkpoint names (default: --out)");

  int sample_n = 10, sample_specs = -1;
  auto* sample = app.add_subcommand("sample", "print programs, or programs with random specifications as JSONL");
  sample->add_option("--programs", sample_n, "number of programs")->capture_default_str();
  sample->add_option("--specs", sample_specs, "examples per random specification");

  std::vector<std::string> serve_ckpts;
  int port = -1;
  auto* serve = app.add_subcommand("serve", "run the HTTP game service");
  serve->add_option("--ckpt", serve_ckpts, "listener checkpoints, optionally as id=path; repeatable");
  serve->add_option("--history", history, "directory for resolving checkpoint names (default: --out)");
  serve->add_option("--port", port, "port (default: PRAX_PORT, then serve.port; 0 picks a free port)");

  std::string target;
  auto* inspect = app.add_subcommand("inspect", "summarize a checkpoint, dataset, trace file, report or history directory");
  inspect->add_option("path", target, "file or directory")->required()->check(CLI::ExistingPath);

  CLI11_PARSE(app, argc, argv);
  set_log_level(g.log_level == "debug"  ? LogLevel::Debug
                : g.log_level == "info" ? LogLevel::Info
                : g.log_level == "off"  ? LogLevel::Off
                                        : LogLevel::Warn);
  try {
    if (*train) return cmd_train(g, resume);
    if (*generate) {
      if (!literal && ckpt.empty()) throw CLI::ValidationError("generate", "--ckpt is required unless --literal is given");
      return cmd_generate(g, ckpt, base_ckpt, history, n_programs, literal);
    }
    if (*eval) return cmd_eval(g, mode, data, ckpt, history);
    if (*sample) return cmd_sample(g, sample_n, sample_specs);
    if (*serve) return cmd_serve(g, serve_ckpts, history, port);
    if (*inspect) return cmd_inspect(target);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const ConfigError& e) {
    std::cerr << "prax: config error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "prax: data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "prax: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
