// pedagogy: train / eval / oracle / serve / score

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pedagogy/harness/experiment.hpp"
#include "pedagogy/harness/service.hpp"

namespace fs = std::filesystem;
using namespace pedagogy;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* app, Common& c, bool config_required) {
  auto* opt = app->add_option("--config", c.config, "JSON config file");
  if (config_required) opt->required();
  opt->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "RNG seed (overrides the config)");
  app->add_option("--out", c.out, "output directory");
}

harness::ExperimentConfig experiment_config(const Common& c) {
  auto cfg = c.config.empty() ? harness::ExperimentConfig{} : harness::load_experiment_config(c.config);
  if (c.seed) cfg.train.seed = *c.seed;
  if (!c.out.empty()) cfg.out = c.out;
  return cfg;
}

void print_summary(const harness::ExperimentResult& r) {
  for (const auto& rep : r.reports) {
    std::cout << rep.policy << ": " << rep.metric_name << " mean " << rep.mean << " (std " << rep.std << ", n " << rep.n()
              << ")";
    if (rep.match_rate) std::cout << " match_rate " << *rep.match_rate;
    std::cout << " inside " << rep.inside_rate << '\n';
  }
}

// Service config: {"address", "port", "storage", "seed",
//                  "checkpoints": {"bimodal": {"student": path, "teacher": path}, "boolean": {...}}}
harness::ServiceOptions service_options(const json& j, const Common& c) {
  harness::ServiceOptions opt;
  opt.storage = j.value("storage", std::string("sessions"));
  opt.seed = c.seed.value_or(j.value("seed", std::uint64_t{1}));
  if (j.contains("checkpoints")) {
    for (const auto& [name, paths] : j.at("checkpoints").items()) {
      const auto kind = parse_task_kind(name);
      std::shared_ptr<const Task> task = make_task(kind);
      harness::TaskModels m;
      m.task = task;
      if (paths.contains("student"))
        m.student = std::make_shared<const nets::StudentNet>(nets::StudentNet::load(*task, paths.at("student").get<std::string>()));
      if (paths.contains("teacher"))
        m.teacher = std::make_shared<const nets::TeacherNet>(nets::TeacherNet::load(*task, paths.at("teacher").get<std::string>()));
      opt.models[kind] = std::move(m);
    }
  }
  return opt;
}

json read_json(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return json::parse(in);
}

httplib::Server* g_server = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Teacher/student pedagogy experiments"};
  app.require_subcommand(1);

  Common train_c, eval_c, oracle_c, serve_c, score_c;
  auto* train = app.add_subcommand("train", "train per the config's regime, evaluate and write reports");
  add_common(train, train_c, false);

  auto* eval = app.add_subcommand("eval", "evaluate saved checkpoints");
  add_common(eval, eval_c, false);
  std::string from, policy = "teacher";
  eval->add_option("--from", from, "directory written by `train`")->required();
  eval->add_option("--policy", policy, "random | teacher | joint");

  auto* orc = app.add_subcommand("oracle", "recursive Bayesian fixed point on the task's discrete domain");
  add_common(orc, oracle_c, false);

  auto* serve = app.add_subcommand("serve", "run the study session service");
  add_common(serve, serve_c, false);
  std::string address = "127.0.0.1";
  int port = 8080;
  serve->add_option("--address", address, "bind address");
  serve->add_option("--port", port, "port");

  auto* score = app.add_subcommand("score", "score completed session logs");
  add_common(score, score_c, false);
  std::string logs;
  score->add_option("--logs", logs, "session log directory (overrides the config's storage)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const auto cfg = experiment_config(train_c);
      const auto r = harness::run_experiment(cfg);
      print_summary(r);
      std::cout << "wrote " << cfg.out.string() << '\n';
    } else if (*orc) {
      auto cfg = experiment_config(oracle_c);
      cfg.regime = harness::Regime::Oracle;
      if (oracle_c.config.empty()) cfg.train.task = TaskKind::Boolean;
      const auto r = harness::run_experiment(cfg);
      std::cout << r.summary.at("oracle").dump(2) << "\nwrote " << cfg.out.string() << '\n';
    } else if (*eval) {
      auto cfg = experiment_config(eval_c);
      const auto task = training::make_task(cfg.train);
      const auto pol = metrics::parse_policy(policy);
      const std::string tag = pol == metrics::Policy::Joint ? "joint" : "br";
      const fs::path dir = from;
      std::optional<nets::StudentNet> student;
      std::optional<nets::TeacherNet> teacher;
      if (pol != metrics::Policy::Random) {
        student = nets::StudentNet::load(*task, dir / (tag + "_student.json"));
        teacher = nets::TeacherNet::load(*task, dir / (tag + "_teacher.json"));
      }
      Rng rng = training::detail::init_rng(cfg.train, 4);
      metrics::EvalOptions opt;
      opt.episodes = cfg.eval_episodes;
      opt.selection = {cfg.train.temperature_end, false, cfg.train.greedy_eval};
      const auto rep = metrics::evaluate_policy(pol, *task, student ? &*student : nullptr, teacher ? &*teacher : nullptr,
                                                rng, opt);
      const fs::path out = eval_c.out.empty() ? dir / "eval" : fs::path(eval_c.out);
      rep.write(out);
      std::cout << rep.summary().dump(2) << "\nwrote " << out.string() << '\n';
    } else if (*serve) {
      harness::StudyService svc(service_options(read_json(serve_c.config), serve_c));
      httplib::Server server;
      harness::register_routes(server, svc);
      g_server = &server;
      std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
      std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
      std::cout << "replayed " << svc.session_count() << " sessions; listening on " << address << ':' << port << std::endl;
      if (!server.listen(address, port)) {
        std::cerr << "error: cannot bind " << address << ':' << port << '\n';
        return 1;
      }
    } else if (*score) {
      // Checkpoints in the config are only needed to replay interactive sessions.
      auto j = read_json(score_c.config);
      if (!logs.empty()) j["storage"] = logs;
      const auto opt = service_options(j, score_c);
      harness::StudyService svc(opt);
      const auto s = svc.scores();
      std::cout << s.dump(2) << '\n';
      if (!score_c.out.empty()) {
        fs::create_directories(score_c.out);
        std::ofstream(fs::path(score_c.out) / "scores.json", std::ios::trunc) << s.dump(2) << '\n';
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
