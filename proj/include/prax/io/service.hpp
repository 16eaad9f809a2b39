#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "httplib.h"
#include "prax/eval.hpp"
#include "prax/io/config.hpp"
#include "prax/io/formats.hpp"

namespace prax::io {

enum class SessionState { Active, Solved, Exhausted };

inline std::string to_string(SessionState s) {
  switch (s) {
    case SessionState::Active: return "active";
    case SessionState::Solved: return "solved";
    case SessionState::Exhausted: return "exhausted";
  }
  return "active";
}

/// Status code plus JSON body of one request.
struct Reply {
  int status = 200;
  json body;
};

/// In-memory game sessions over a set of listener snapshots.  A finished
/// session is appended to the trace log.
class GameService {
 public:
  struct Options {
    EvalConfig eval;
    bool free_play = false;
    bool show_top10 = false;
    int target_max_tokens = 10;
    int skip_after = kMetricTurns;
    std::filesystem::path trace_log;  // empty: no log
    std::uint64_t seed = 0;
  };

  GameService(ProgramSource targets, Options opt) : targets_(std::move(targets)), opt_(std::move(opt)) { opt_.eval.validate(); }

  /// Installs or replaces a snapshot; sessions already open keep the old one.
  void set_snapshot(const std::string& id, ListenerSnapshot snap) {
    std::lock_guard lock(mu_);
    snapshots_[id] = std::make_shared<const ListenerSnapshot>(std::move(snap));
    if (default_id_.empty()) default_id_ = id;
  }

  void set_default_snapshot(const std::string& id) {
    std::lock_guard lock(mu_);
    if (!snapshots_.count(id)) throw std::invalid_argument("unknown snapshot " + id);
    default_id_ = id;
  }

  Reply snapshots() const {
    std::lock_guard lock(mu_);
    json list = json::array();
    for (const auto& [id, s] : snapshots_) list.push_back({{"id", id}, {"version", s->version()}});
    return {200, {{"snapshots", list}, {"default", default_id_}}};
  }

  /// body: {"listener"?: id, "target"?: regex}
  Reply create_session(const json& body) {
    if (!body.is_object()) return error(400, "body must be a JSON object");
    std::shared_ptr<const ListenerSnapshot> snap;
    std::string id;
    std::uint64_t n = 0;
    {
      std::lock_guard lock(mu_);
      id = body.value("listener", default_id_);
      auto it = snapshots_.find(id);
      if (it == snapshots_.end()) return error(404, "unknown listener " + id);
      snap = it->second;
      n = counter_++;
    }
    auto s = std::make_shared<Session>();
    s->listener_id = id;
    s->listener = std::move(snap);
    s->trace.source = TraceSource::LiveSession;
    s->trace.seed = derive_seed(opt_.seed, n, 0x5e55);
    if (body.contains("target")) {
      try {
        s->trace.target = RegexProgram::parse(body["target"].get<std::string>());
      } catch (const std::exception& e) {
        return error(400, std::string("bad target: ") + e.what());
      }
    } else {
      Rng rng(derive_seed(opt_.seed, n, 0x7a6));
      for (int attempt = 0;; ++attempt) {
        auto p = targets_(rng);
        if (static_cast<int>(p.size()) <= opt_.target_max_tokens || attempt >= 1000) {
          s->trace.target = std::move(p);
          break;
        }
      }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(derive_seed(opt_.seed, n, 0x1d)));
    const std::string sid = buf;
    {
      std::lock_guard lock(mu_);
      sessions_[sid] = s;
    }
    return {200, {{"session_id", sid}, {"target_regex", s->trace.target.text()}, {"listener", id}}};
  }

  /// body: {"string": text, "label": bool}
  Reply submit_example(const std::string& sid, const json& body) {
    auto s = find(sid);
    if (!s) return error(404, "unknown session " + sid);
    if (!body.is_object() || !body.contains("string") || !body["string"].is_string() || !body.contains("label") ||
        !body["label"].is_boolean())
      return error(400, "body must be {\"string\": text, \"label\": bool}");
    const Example e{body["string"].get<std::string>(), body["label"].get<bool>()};
    std::lock_guard lock(s->mu);
    if (s->state != SessionState::Active) return error(410, "session is " + to_string(s->state));
    if (s->trace.spec().contains_text(e.text)) return error(409, "duplicate example");
    if (!opt_.free_play && !is_consistent(s->trace.target, e))
      return error(409, std::string("inconsistent example: the target ") + (e.label ? "does not match" : "matches") + " this string");
    const bool solved = play_turn(s->trace, *s->listener, e, opt_.eval);
    const auto& turn = s->trace.turns.back();
    json r = {{"turn", s->trace.turns.size()}, {"solved", solved}};
    r["top1_guess"] = turn.guesses.empty() ? json(nullptr) : json(turn.guesses.front().program.text());
    if (opt_.show_top10) r["guesses"] = guesses_json(turn);
    if (solved) close(*s, SessionState::Solved);
    r["state"] = to_string(s->state);
    return {200, r};
  }

  Reply get_session(const std::string& sid) const {
    auto s = find(sid);
    if (!s) return error(404, "unknown session " + sid);
    std::lock_guard lock(s->mu);
    json turns = json::array();
    for (std::size_t i = 0; i < s->trace.turns.size(); ++i) {
      const auto& t = s->trace.turns[i];
      json j = {{"turn", i + 1},
                {"example", t.example.text},
                {"label", t.example.label},
                {"top1_guess", t.guesses.empty() ? json(nullptr) : json(t.guesses.front().program.text())}};
      if (opt_.show_top10) j["guesses"] = guesses_json(t);
      turns.push_back(std::move(j));
    }
    const int n = static_cast<int>(s->trace.turns.size());
    return {200,
            {{"session_id", sid},
             {"target_regex", s->trace.target.text()},
             {"listener", s->listener_id},
             {"state", to_string(s->state)},
             {"turns", turns},
             {"can_skip", s->state == SessionState::Active && n >= opt_.skip_after},
             {"remaining_turns", std::max(0, opt_.eval.max_turns - n)}}};
  }

  /// Allowed once skip_after examples have been given.
  Reply skip(const std::string& sid) {
    auto s = find(sid);
    if (!s) return error(404, "unknown session " + sid);
    std::lock_guard lock(s->mu);
    if (s->state != SessionState::Active) return error(410, "session is " + to_string(s->state));
    if (static_cast<int>(s->trace.turns.size()) < opt_.skip_after)
      return error(409, "skipping is allowed after " + std::to_string(opt_.skip_after) + " examples");
    close(*s, SessionState::Exhausted);
    return {200, {{"session_id", sid}, {"state", to_string(s->state)}}};
  }

  /// Trace of a session, finished or not.
  std::optional<InteractionTrace> trace(const std::string& sid) const {
    auto s = find(sid);
    if (!s) return std::nullopt;
    std::lock_guard lock(s->mu);
    return s->trace;
  }

  /// Routes for the endpoints on server.
  void mount(httplib::Server& server) {
    auto send = [](httplib::Response& res, const Reply& r) {
      res.status = r.status;
      res.set_content(r.body.dump(), "application/json");
    };
    auto parse = [](const httplib::Request& req) -> std::optional<json> {
      if (req.body.empty()) return json::object();
      try {
        return json::parse(req.body);
      } catch (const json::exception&) {
        return std::nullopt;
      }
    };
    server.Get("/healthz", [send](const httplib::Request&, httplib::Response& res) { send(res, {200, {{"status", "ok"}}}); });
    server.Get("/snapshots", [this, send](const httplib::Request&, httplib::Response& res) { send(res, snapshots()); });
    server.Post("/sessions", [this, send, parse](const httplib::Request& req, httplib::Response& res) {
      const auto body = parse(req);
      send(res, body ? create_session(*body) : error(400, "malformed JSON"));
    });
    server.Get(R"(/sessions/([0-9a-f]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, get_session(req.matches[1]));
    });
    server.Post(R"(/sessions/([0-9a-f]+)/examples)", [this, send, parse](const httplib::Request& req, httplib::Response& res) {
      const auto body = parse(req);
      send(res, body ? submit_example(req.matches[1], *body) : error(400, "malformed JSON"));
    });
    server.Post(R"(/sessions/([0-9a-f]+)/skip)", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, skip(req.matches[1]));
    });
    server.set_error_handler([send](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) send(res, {res.status, {{"error", res.status == 404 ? "not found" : "request failed"}}});
    });
  }

 private:
  struct Session {
    mutable std::mutex mu;
    std::string listener_id;
    std::shared_ptr<const ListenerSnapshot> listener;
    InteractionTrace trace;
    SessionState state = SessionState::Active;
  };

  static Reply error(int status, std::string why) { return {status, {{"error", std::move(why)}}}; }

  static json guesses_json(const Turn& t) {
    json g = json::array();
    for (const auto& sp : t.guesses) g.push_back({{"program", sp.program.text()}, {"score", sp.log_score}});
    return g;
  }

  std::shared_ptr<Session> find(const std::string& sid) const {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(sid);
    return it == sessions_.end() ? nullptr : it->second;
  }

  // Caller holds s.mu.
  void close(Session& s, SessionState state) {
    s.state = state;
    if (opt_.trace_log.empty()) return;
    std::lock_guard lock(log_mu_);
    append_line(opt_.trace_log, to_json(s.trace).dump());
  }

  ProgramSource targets_;
  Options opt_;
  mutable std::mutex mu_;
  std::mutex log_mu_;
  std::map<std::string, std::shared_ptr<const ListenerSnapshot>> snapshots_;
  std::string default_id_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t counter_ = 0;
};

}  // namespace prax::io
