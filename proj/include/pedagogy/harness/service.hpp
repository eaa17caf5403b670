#pragma once

// Study session service: session state machine, append-only JSONL event logs
// with replay, and the HTTP routes.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "pedagogy/harness/study.hpp"

namespace pedagogy::harness {

using nlohmann::json;

class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, std::string code, const std::string& message)
      : std::runtime_error(message), status_(status), code_(std::move(code)) {}
  int status() const noexcept { return status_; }
  const std::string& code() const noexcept { return code_; }

 private:
  int status_;
  std::string code_;
};

enum class SessionMode { Passive, Interactive };

inline const char* to_string(SessionMode m) { return m == SessionMode::Passive ? "passive" : "interactive"; }
inline SessionMode parse_mode(const std::string& s) {
  if (s == "passive") return SessionMode::Passive;
  if (s == "interactive") return SessionMode::Interactive;
  throw std::invalid_argument("unknown mode '" + s + "' (expected passive or interactive)");
}

/// Trained networks for one task. The student is needed for passive teacher
/// items; interactive sessions only run the teacher.
// The nets point at their task, so the task rides along with them.
struct TaskModels {
  std::shared_ptr<const Task> task;
  std::shared_ptr<const nets::StudentNet> student;
  std::shared_ptr<const nets::TeacherNet> teacher;
};

struct ServiceOptions {
  std::filesystem::path storage = "sessions";
  std::uint64_t seed = 1;
  std::map<TaskKind, TaskModels> models;
};

struct StudySession {
  std::string id;
  TaskKind task = TaskKind::Bimodal;
  Condition condition = Condition::Random;
  SessionMode mode = SessionMode::Passive;
  std::uint64_t seed = 0;
  std::vector<StudyItem> items;
  std::vector<std::optional<ItemResponse>> responses;
  std::size_t current = 0;
  // interactive state for the current item
  std::vector<double> teacher_state;
  std::vector<double> guess;

  bool complete() const { return current >= items.size(); }
  const char* status() const { return complete() ? "complete" : "active"; }
};

class StudyService {
 public:
  explicit StudyService(ServiceOptions opt) : opt_(std::move(opt)) {
    std::filesystem::create_directories(opt_.storage);
    replay_all();
  }

  json create(const json& body) {
    TaskKind task;
    Condition cond;
    SessionMode mode;
    try {
      task = parse_task_kind(body.at("task").get<std::string>());
      cond = parse_condition(body.value("condition", std::string("random")));
      mode = parse_mode(body.value("mode", std::string("passive")));
    } catch (const json::exception& e) {
      throw ServiceError(400, "bad_request", std::string("session request: ") + e.what());
    } catch (const std::invalid_argument& e) {
      throw ServiceError(400, "bad_request", e.what());
    }
    if (task != TaskKind::Bimodal && task != TaskKind::Boolean)
      throw ServiceError(400, "bad_request", "study sessions exist for the bimodal and boolean tasks only");
    if (mode == SessionMode::Interactive && cond != Condition::Teacher)
      throw ServiceError(400, "bad_request", "interactive sessions need the teacher condition");
    if (cond == Condition::Teacher) {
      const auto* m = models_for(task);
      if (!m || !m->teacher || (mode == SessionMode::Passive && !m->student))
        throw ServiceError(503, "model_unavailable", std::string("no trained checkpoint loaded for ") + to_string(task));
    }

    std::lock_guard lock(map_mu_);
    const auto n = ++counter_;
    const std::uint64_t seed = body.contains("seed") ? body.at("seed").get<std::uint64_t>()
                                                     : opt_.seed * 0x9E3779B97F4A7C15ULL + n;
    auto entry = std::make_shared<Entry>();
    entry->s.id = make_id(n);
    const json payload = {{"task", to_string(task)}, {"condition", to_string(cond)}, {"mode", to_string(mode)}, {"seed", seed}};
    apply(entry->s, "created", payload);
    append(entry->s.id, "created", payload);
    sessions_[entry->s.id] = entry;
    return {{"session_id", entry->s.id}, {"status", entry->s.status()}};
  }

  json item(const std::string& id) {
    auto e = find(id);
    std::lock_guard lock(e->mu);
    const auto& s = e->s;
    if (s.complete()) throw ServiceError(409, "session_complete", "session " + id + " has no remaining items");
    const auto& it = s.items[s.current];
    json shown = json::array(), stimuli = json::array();
    for (const auto& ex : it.shown) shown.push_back(example_view(s.task, ex));
    // Interactive test objects are only fixed once both examples are out.
    if (s.mode == SessionMode::Passive || it.shown.size() == kShownExamples)
      for (const auto& st : it.stimuli) stimuli.push_back(stimulus_view(s.task, st));
    return {{"session_id", id},          {"task", to_string(s.task)}, {"mode", to_string(s.mode)},
            {"index", s.current},        {"total", s.items.size()},   {"shown", shown},
            {"stimuli", stimuli},        {"status", s.status()}};
  }

  json respond(const std::string& id, const json& body) { return mutate(id, "response", body); }
  json post_guess(const std::string& id, const json& body) { return mutate(id, "guess", body); }
  json next_example(const std::string& id) { return mutate(id, "next_example", json::object()); }

  json result(const std::string& id) {
    auto e = find(id);
    std::lock_guard lock(e->mu);
    const auto& s = e->s;
    if (!s.complete()) throw ServiceError(409, "session_incomplete", "session " + id + " is not complete");
    return result_view(s);
  }

  /// Scores of every complete session, plus per-condition means.
  json scores() {
    std::vector<SessionScore> all;
    std::lock_guard lock(map_mu_);
    for (auto& [id, e] : sessions_) {
      std::lock_guard l2(e->mu);
      if (e->s.complete()) all.push_back(score(e->s));
    }
    json per = json::array();
    for (const auto& s : all) per.push_back({{"session_id", s.session_id}, {"accuracy", s.accuracy}});
    return {{"sessions", per}, {"aggregate", aggregate_scores(all)}};
  }

  std::size_t session_count() {
    std::lock_guard lock(map_mu_);
    return sessions_.size();
  }

 private:
  struct Entry {
    std::mutex mu;
    StudySession s;
  };

  static std::string make_id(std::uint64_t n) {
    std::string digits = std::to_string(n);
    return "s" + std::string(digits.size() < 6 ? 6 - digits.size() : 0, '0') + digits;
  }

  const TaskModels* models_for(TaskKind k) const {
    const auto it = opt_.models.find(k);
    return it == opt_.models.end() ? nullptr : &it->second;
  }

  const Task& task_of(TaskKind k) const { return k == TaskKind::Bimodal ? static_cast<const Task&>(bimodal_) : boolean_; }

  std::shared_ptr<Entry> find(const std::string& id) {
    std::lock_guard lock(map_mu_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw ServiceError(404, "not_found", "no session " + id);
    return it->second;
  }

  json mutate(const std::string& id, const std::string& event, const json& body) {
    auto e = find(id);
    std::lock_guard lock(e->mu);
    auto& s = e->s;
    if (!body.is_object()) throw ServiceError(400, "bad_request", "request body must be a JSON object");
    json payload = body;
    payload["item"] = s.current;
    const json out = apply(s, event, payload);
    if (event == "next_example") payload["example"] = out.at("example");
    append(id, event, payload);
    return out;
  }

  /// The single state transition used both live and in replay. Throws ServiceError
  /// without touching `s` when the event is not admissible.
  json apply(StudySession& s, const std::string& event, const json& p) const {
    if (event == "created") {
      s.task = parse_task_kind(p.at("task").get<std::string>());
      s.condition = parse_condition(p.at("condition").get<std::string>());
      s.mode = parse_mode(p.at("mode").get<std::string>());
      s.seed = p.at("seed").get<std::uint64_t>();
      const auto& task = task_of(s.task);
      const auto* m = models_for(s.task);
      Rng rng(s.seed);
      s.items = build_study_items(task, s.condition, m ? m->student.get() : nullptr, m ? m->teacher.get() : nullptr, rng,
                                  s.mode == SessionMode::Passive);
      s.responses.assign(s.items.size(), std::nullopt);
      s.current = 0;
      reset_interactive(s);
      return {};
    }
    if (s.complete()) throw ServiceError(409, "session_complete", "session " + s.id + " is already complete");
    if (p.contains("item") && p.at("item").get<std::size_t>() != s.current)
      throw ServiceError(409, "stale_item", "event targets item " + p.at("item").dump() + " but the current item is " +
                                                std::to_string(s.current));
    const auto& task = task_of(s.task);
    auto& item = s.items[s.current];

    if (event == "response") {
      if (s.mode == SessionMode::Interactive && item.shown.size() < kShownExamples)
        throw ServiceError(409, "examples_pending", "request both teaching examples before responding");
      ItemResponse r;
      try {
        if (s.task == TaskKind::Bimodal)
          r.ratings = p.at("ratings").get<std::vector<int>>();
        else
          r.classifications = p.at("classifications").get<std::vector<bool>>();
        check_response(task, item, r);
      } catch (const json::exception& e) {
        throw ServiceError(400, "bad_request", std::string("response: ") + e.what());
      } catch (const std::invalid_argument& e) {
        throw ServiceError(400, "bad_request", e.what());
      }
      s.responses[s.current] = std::move(r);
      ++s.current;
      reset_interactive(s);
      return {{"accepted", true}, {"next_index", s.current}, {"status", s.status()}};
    }

    if (s.mode != SessionMode::Interactive)
      throw ServiceError(409, "not_interactive", event + " is only available in interactive sessions");

    if (event == "guess") {
      std::vector<double> g;
      try {
        g = p.at("guess").get<std::vector<double>>();
      } catch (const json::exception& e) {
        throw ServiceError(400, "bad_request", std::string("guess: ") + e.what());
      }
      if (g.size() != task.spec().concept_dim)
        throw ServiceError(400, "bad_request", "guess must have " + std::to_string(task.spec().concept_dim) + " entries");
      for (double x : g)
        if (!std::isfinite(x)) throw ServiceError(400, "bad_request", "guess entries must be finite");
      s.guess = std::move(g);
      return {{"accepted", true}};
    }

    if (event == "next_example") {
      if (item.shown.size() >= kShownExamples)
        throw ServiceError(409, "examples_exhausted", "both teaching examples for this item were already given");
      const auto* m = models_for(s.task);
      if (!m || !m->teacher) throw ServiceError(503, "model_unavailable", "no teacher checkpoint loaded");
      auto [state, emission] = m->teacher->step(s.teacher_state, item.concept_value, s.guess);
      s.teacher_state = std::move(state);
      Example ex;
      if (task.spec().discrete()) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < emission.size(); ++j)
          if (emission[j] > emission[best]) best = j;
        ex = task.candidate_example(best);
      } else {
        ex = Example{emission, std::nullopt};
      }
      item.shown.push_back(ex);
      if (item.shown.size() == kShownExamples && s.task == TaskKind::Boolean) {
        Rng rng(s.seed ^ ((s.current + 1) * 0xD1B54A32D192ED03ULL));
        draw_boolean_stimuli(item, rng);
      }
      return {{"example", example_view(s.task, ex)}, {"shown_count", item.shown.size()}};
    }
    throw ServiceError(400, "bad_request", "unknown event " + event);
  }

  void reset_interactive(StudySession& s) const {
    if (s.mode != SessionMode::Interactive) return;
    const auto* m = models_for(s.task);
    s.teacher_state = m && m->teacher ? m->teacher->initial_state() : std::vector<double>{};
    s.guess.assign(task_of(s.task).spec().concept_dim, 0.0);
  }

  SessionScore score(const StudySession& s) const {
    return score_responses(s.id, s.task, s.condition, s.items, s.responses);
  }

  json result_view(const StudySession& s) const {
    const auto sc = score(s);
    json items = json::array();
    for (std::size_t i = 0; i < s.items.size(); ++i) {
      const auto& it = s.items[i];
      json shown = json::array(), stimuli = json::array();
      for (const auto& ex : it.shown) shown.push_back(example_view(s.task, ex));
      for (const auto& st : it.stimuli) {
        auto v = stimulus_view(s.task, st);
        v["target"] = st.target;
        stimuli.push_back(v);
      }
      items.push_back({{"concept", it.concept_value}, {"shown", shown}, {"stimuli", stimuli}, {"score", sc.item_scores[i]}});
    }
    return {{"session_id", s.id},
            {"task", to_string(s.task)},
            {"condition", to_string(s.condition)},
            {"mode", to_string(s.mode)},
            {"extension", s.mode == SessionMode::Interactive},
            {"accuracy", sc.accuracy},
            {"items", items}};
  }

  std::filesystem::path log_path(const std::string& id) const { return opt_.storage / (id + ".jsonl"); }

  void append(const std::string& id, const std::string& event, const json& payload) const {
    const auto ts = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::system_clock::now().time_since_epoch()).count();
    std::ofstream f(log_path(id), std::ios::app);
    if (!f) throw ServiceError(500, "storage_error", "cannot append to " + log_path(id).string());
    f << json{{"ts", ts}, {"session_id", id}, {"event", event}, {"payload", payload}}.dump() << '\n';
    f.flush();
    if (!f) throw ServiceError(500, "storage_error", "write failed for " + log_path(id).string());
  }

  void replay_all() {
    for (const auto& de : std::filesystem::directory_iterator(opt_.storage)) {
      if (de.path().extension() != ".jsonl") continue;
      auto entry = std::make_shared<Entry>();
      entry->s.id = de.path().stem().string();
      std::ifstream in(de.path());
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
          const auto ev = json::parse(line);
          if (ev.at("session_id").get<std::string>() != entry->s.id) throw std::runtime_error("session id mismatch");
          const auto name = ev.at("event").get<std::string>();
          if ((lineno == 1) != (name == "created")) throw std::runtime_error("log must start with a single created event");
          apply(entry->s, name, ev.at("payload"));
        } catch (const std::exception& e) {
          throw std::runtime_error("corrupt session log " + de.path().string() + ":" + std::to_string(lineno) + ": " +
                                   e.what());
        }
      }
      if (lineno == 0) throw std::runtime_error("corrupt session log " + de.path().string() + ": empty");
      const auto& id = entry->s.id;
      if (id.size() > 1 && id[0] == 's' && id.find_first_not_of("0123456789", 1) == std::string::npos)
        counter_ = std::max<std::uint64_t>(counter_, std::stoull(id.substr(1)));
      sessions_[id] = entry;
    }
  }

  ServiceOptions opt_;
  BimodalTask bimodal_;
  BooleanTask boolean_;
  std::mutex map_mu_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::uint64_t counter_ = 0;
};

/// Wires the HTTP interface onto `server`. Errors are returned as {code, message}.
inline void register_routes(httplib::Server& server, StudyService& svc) {
  auto handle = [](httplib::Response& res, auto&& fn) {
    try {
      res.set_content(fn().dump(), "application/json");
    } catch (const ServiceError& e) {
      res.status = e.status();
      res.set_content(json{{"code", e.code()}, {"message", e.what()}}.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(json{{"code", "internal"}, {"message", e.what()}}.dump(), "application/json");
    }
  };
  auto body_of = [](const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
      return json::parse(req.body);
    } catch (const json::exception& e) {
      throw ServiceError(400, "bad_json", std::string("request body is not JSON: ") + e.what());
    }
  };
  server.Post("/sessions", [&svc, handle, body_of](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { return svc.create(body_of(req)); });
  });
  server.Get(R"(/sessions/([^/]+)/item)", [&svc, handle](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { return svc.item(req.matches[1]); });
  });
  server.Post(R"(/sessions/([^/]+)/response)", [&svc, handle, body_of](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { return svc.respond(req.matches[1], body_of(req)); });
  });
  server.Post(R"(/sessions/([^/]+)/guess)", [&svc, handle, body_of](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { return svc.post_guess(req.matches[1], body_of(req)); });
  });
  server.Get(R"(/sessions/([^/]+)/next-example)", [&svc, handle](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { return svc.next_example(req.matches[1]); });
  });
  server.Get(R"(/sessions/([^/]+)/result)", [&svc, handle](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { return svc.result(req.matches[1]); });
  });
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    res.set_content(json{{"code", res.status == 404 ? "not_found" : "error"}, {"message", "no such route"}}.dump(),
                    "application/json");
  });
}

}  // namespace pedagogy::harness
