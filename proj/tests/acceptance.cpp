// Acceptance runner: one PASS/FAIL line per primary criterion.
//
//   acceptance --work DIR --configs DIR --stage train   train the four task runs (skips up-to-date ones)
//   acceptance --work DIR --configs DIR [--cli PATH]    check; trains first if a run is missing
//
// Exit status is nonzero when any line fails.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "brute_force.hpp"
#include "oracle_checks.hpp"
#include "pedagogy/harness/experiment.hpp"
#include "pedagogy/harness/service.hpp"
#include "pedagogy/nets/gumbel.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace pedagogy;
using nlohmann::json;

namespace {

const std::vector<std::string> kTasks{"rectangle", "bimodal", "boolean", "hierarchy"};

struct Line {
  std::string name;
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// ---- training stage ----

harness::ExperimentConfig task_config(const fs::path& configs, const fs::path& work, const std::string& task) {
  auto cfg = harness::load_experiment_config(configs / (task + ".json"));
  cfg.out = work / task;
  return cfg;
}

bool up_to_date(const harness::ExperimentConfig& cfg) {
  const auto stamp = cfg.out / "run.json";
  if (!fs::exists(stamp) || !fs::exists(cfg.out / "summary.json")) return false;
  json want = cfg;
  want.erase("out");
  return read_json(stamp).at("config") == want;
}

void train_task(const harness::ExperimentConfig& cfg) {
  std::cout << "training " << to_string(cfg.train.task) << " -> " << cfg.out.string() << std::endl;
  fs::remove_all(cfg.out);
  const auto wall = std::chrono::steady_clock::now();
  const std::clock_t cpu0 = std::clock();
  harness::run_experiment(cfg);
  const double cpu = double(std::clock() - cpu0) / CLOCKS_PER_SEC;
  json stamp = {{"config", cfg}, {"cpu_seconds", cpu}, {"wall_seconds", seconds_since(wall)}};
  stamp["config"].erase("out");
  std::ofstream(cfg.out / "run.json", std::ios::trunc) << stamp.dump(2) << '\n';
  std::cout << "  cpu " << fmt(cpu) << " s" << std::endl;
}

// ---- checks ----

Line gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = testutil::random_graph_gradient_suite(120, 2024);
  const double secs = seconds_since(t0);
  std::string missing;
  for (const auto& op : testutil::differentiable_ops())
    if (!r.ops_seen.count(op)) missing += " " + op;
  const bool ok = r.graphs >= 100 && r.max_rel_error <= 1e-4 && missing.empty() && secs < 60;
  return {"gradient correctness", ok,
          std::to_string(r.graphs) + " graphs, max rel err " + fmt(r.max_rel_error) + (missing.empty() ? "" : ", unexercised:" + missing) +
              ", " + fmt(secs, 3) + " s"};
}

Line gumbel_law() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(77);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> logits(36);
  for (auto& l : logits) l = g(rng);
  std::vector<double> p(36);
  double z = 0;
  for (std::size_t i = 0; i < 36; ++i) z += p[i] = std::exp(logits[i]);
  for (auto& v : p) v /= z;
  const int n = 10000;
  std::vector<int> counts(36, 0);
  for (int i = 0; i < n; ++i) {
    const auto h = nets::gumbel_softmax(logits, 1.0, rng, true);
    ++counts[std::max_element(h.begin(), h.end()) - h.begin()];
  }
  double chi2 = 0;
  for (std::size_t i = 0; i < 36; ++i) chi2 += (counts[i] - n * p[i]) * (counts[i] - n * p[i]) / (n * p[i]);
  const double crit = 57.342;  // chi-square(35) 0.99 quantile
  const double secs = seconds_since(t0);
  return {"gumbel-softmax law", chi2 < crit && secs < 60,
          "chi2 " + fmt(chi2) + " < " + fmt(crit) + " (p > 0.01, 36 categories, 10000 samples)"};
}

const json& policy(const json& summary, const std::string& name) { return summary.at("policies").at(name); }

double cpu_of(const fs::path& dir) { return read_json(dir / "run.json").at("cpu_seconds").get<double>(); }

Line rectangle(const fs::path& work) {
  const auto s = read_json(work / "rectangle" / "summary.json");
  const double t = policy(s, "teacher").at("mean"), r = policy(s, "random").at("mean");
  const double inside = policy(s, "teacher").at("inside_rate");
  const double cpu = cpu_of(work / "rectangle");
  return {"rectangle", t < 0.5 * r && inside >= 0.9 && cpu <= 600,
          "corner teacher " + fmt(t) + " vs 0.5 x random " + fmt(0.5 * r) + ", inside " + fmt(inside) + " (need 0.9), cpu " +
              fmt(cpu, 3) + " s"};
}

Line bimodal(const fs::path& work) {
  const auto s = read_json(work / "bimodal" / "summary.json");
  const double t = policy(s, "teacher").at("mean"), r = policy(s, "random").at("mean");
  // independent Monte Carlo over the prior samplers
  BimodalTask task;
  Rng rng(4242);
  const int n = 200000;
  double mc = 0;
  for (int i = 0; i < n; ++i) {
    const auto c = task.sample_concept(rng);
    const double a = task.sample_example(c, rng).features[0], b = task.sample_example(c, rng).features[0];
    mc += brute::brute_mode(a, b, c[0], c[1]);
  }
  mc /= n;
  const double rel = std::abs(r - mc) / mc;
  const double cpu = cpu_of(work / "bimodal");
  return {"bimodal", t < 0.5 * r && rel <= 0.05 && cpu <= 600,
          "mode dist teacher " + fmt(t) + " vs 0.5 x random " + fmt(0.5 * r) + ", random vs MC " + fmt(mc) + " off " +
              fmt(100 * rel, 3) + "%, cpu " + fmt(cpu, 3) + " s"};
}

double boolean_random_exact() {
  BooleanTask t;
  double rate = 0;
  for (std::size_t k = 1; k <= 3; ++k) {
    const auto cs = t.concepts_with_count(k);
    double rk = 0;
    for (const auto& c : cs) {
      const auto cand = t.consistent_candidates(c);
      double m = 0;
      for (auto a : cand)
        for (auto b : cand) m += brute::brute_boolean(Properties::from_index(a), Properties::from_index(b), c);
      rk += m / double(cand.size() * cand.size());
    }
    rate += rk / double(cs.size()) / 3.0;
  }
  return rate;
}

Line boolean(const fs::path& work) {
  const auto s = read_json(work / "boolean" / "summary.json");
  const double t = policy(s, "teacher").at("match_rate"), r = policy(s, "random").at("match_rate");
  const double j = policy(s, "joint").at("match_rate");
  const double exact = boolean_random_exact();
  const double n = policy(s, "random").at("n");
  const double se = std::sqrt(exact * (1 - exact) / n);
  const bool random_ok = std::abs(exact - 0.36) <= 0.05 && std::abs(r - 0.36) <= 0.05 && std::abs(r - exact) <= 4 * se;
  const double cpu = cpu_of(work / "boolean");
  return {"boolean", t >= 0.60 && random_ok && j <= 0.15 && cpu <= 900,
          "match teacher " + fmt(t) + " (need 0.60), random " + fmt(r) + " exact " + fmt(exact) + ", joint " + fmt(j) +
              " (need <= 0.15), cpu " + fmt(cpu, 3) + " s"};
}

Line hierarchy(const fs::path& work) {
  const auto s = read_json(work / "hierarchy" / "summary.json");
  const auto cfg = s.at("config").get<harness::ExperimentConfig>();
  const auto task = training::make_task(cfg.train);
  const auto& h = dynamic_cast<const HierarchyTask&>(*task).hierarchy();
  const double t = policy(s, "teacher").at("match_rate"), j = policy(s, "joint").at("match_rate");
  const double cpu = cpu_of(work / "hierarchy");
  return {"hierarchy", h.size() == 16 && t >= 0.90 && j <= 0.30 && cpu <= 900,
          std::to_string(h.size()) + " concepts, lca teacher " + fmt(t) + " (need 0.90), joint " + fmt(j) +
              " (need <= 0.30), cpu " + fmt(cpu, 3) + " s"};
}

Line oracle_checks_line() {
  using namespace oracle_checks;
  const auto t0 = std::chrono::steady_clock::now();
  const auto st = fixed_point(ab_domain(), {1.0, 1000, 1e-12});
  Matrix want(2, 3);
  want << 2.0 / 3, 1.0 / 3, 0, 0, 1.0 / 3, 2.0 / 3;
  const double err = (st.teacher - want).cwiseAbs().maxCoeff();
  std::mt19937_64 rng(2024);
  InvariantCheck inv;
  for (int i = 0; i < 1000; ++i) {
    const auto d = random_domain(rng);
    Matrix t = init_teacher(d);
    check_teacher(t, d.consistency, inv);
    const double alpha = 1.0 + (i % 5);
    for (int it = 0; it < 30; ++it) {
      const auto s = student_update(t, d.prior);
      check_student(s, d.consistency, inv);
      t = teacher_update(s.posterior, d.consistency, alpha);
      check_teacher(t, d.consistency, inv);
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = err <= 1e-8 && inv.support_ok && inv.nonneg_ok && inv.worst_norm <= 1e-12 && secs < 60;
  return {"oracle", ok,
          "A/B max err " + fmt(err) + ", 1000 domains: support " + (inv.support_ok ? "kept" : "BROKEN") + ", worst norm err " +
              fmt(inv.worst_norm) + ", " + fmt(secs, 3) + " s"};
}

Line metric_oracles() {
  using namespace brute;
  Rng rng(99);
  std::size_t bad = 0, total = 0;
  {
    RectangleTask t;
    std::uniform_real_distribution<double> u(-12, 12);
    for (int i = 0; i < 10000; ++i, ++total) {
      const auto c = RectangleConcept::from_vector(t.sample_concept(rng));
      const Point a{u(rng), u(rng)}, b{u(rng), u(rng)};
      bad += std::abs(metrics::corner_distance(a, b, c) - brute_corner(a, b, c)) > 1e-9;
    }
  }
  {
    std::uniform_real_distribution<double> u(-5, 25);
    for (int i = 0; i < 10000; ++i, ++total) {
      const double a = u(rng), b = u(rng), m1 = u(rng), m2 = u(rng);
      bad += std::abs(metrics::mode_distance(a, b, m1, m2) - brute_mode(a, b, m1, m2)) > 1e-9;
    }
  }
  {
    BooleanTask t;
    for (int i = 0; i < 10000; ++i, ++total) {
      const auto c = BooleanConcept::from_vector(t.sample_concept(rng));
      const auto cand = t.consistent_candidates(c);
      std::uniform_int_distribution<std::size_t> pick(0, cand.size() - 1);
      const auto a = Properties::from_index(cand[pick(rng)]), b = Properties::from_index(cand[pick(rng)]);
      bad += metrics::boolean_intuitive_match(a, b, c) != brute_boolean(a, b, c);
    }
  }
  {
    std::uniform_int_distribution<std::size_t> br(2, 4), depth(1, 3);
    std::size_t n = 0;
    while (n < 10000) {
      std::vector<std::size_t> branching(depth(rng));
      for (auto& b : branching) b = br(rng);
      const auto h = build_synthetic_hierarchy(branching, 2, rng);
      const auto leaves = h.leaves();
      std::uniform_int_distribution<std::size_t> leaf(0, leaves.size() - 1), node(0, h.size() - 1);
      for (int i = 0; i < 500; ++i, ++n, ++total) {
        const auto a = leaves[leaf(rng)], b = leaves[leaf(rng)];
        const auto c = (i % 2) ? brute_lca(h, a, b) : node(rng);
        bad += metrics::lca_match(h, a, b, c) != (brute_lca(h, a, b) == c);
      }
    }
  }
  return {"metric oracles", bad == 0, std::to_string(total) + " instances over 4 metrics, " + std::to_string(bad) + " disagreements"};
}

// Every file under a, compared bytewise with its twin under b.
std::string compare_trees(const fs::path& a, const fs::path& b, std::size_t& files) {
  for (const auto& de : fs::recursive_directory_iterator(a)) {
    if (!de.is_regular_file()) continue;
    const auto rel = fs::relative(de.path(), a);
    ++files;
    if (!fs::exists(b / rel)) return rel.string() + " missing in rerun";
    if (slurp(de.path()) != slurp(b / rel)) return rel.string() + " differs";
  }
  return {};
}

Line reproducibility(const std::string& cli, const fs::path& configs) {
  testutil::TempDir tmp;
  std::size_t files = 0;
  std::string diff;
  for (const auto& name : kTasks) {
    harness::ExperimentConfig cfg;
    cfg.train.task = parse_task_kind(name);
    cfg.train.seed = 31;
    cfg.train.batch_size = 16;
    cfg.train.hidden = 16;
    cfg.train.hierarchy.embedding_dim = 8;
    cfg.train.student_iterations = cfg.train.teacher_iterations = cfg.train.joint_iterations = 30;
    cfg.include_joint = true;
    cfg.eval_episodes = 100;
    cfg.out = tmp.path() / (name + "_a");
    harness::run_experiment(cfg);
    cfg.out = tmp.path() / (name + "_b");
    harness::run_experiment(cfg);
    diff = compare_trees(tmp.path() / (name + "_a"), cfg.out, files);
    if (!diff.empty()) {
      diff = name + ": " + diff;
      break;
    }
  }
  std::string via_cli = "cli not given";
  if (diff.empty() && !cli.empty()) {
    int rc = 0;
    for (const char* run : {"cli_a", "cli_b"}) {
      const std::string cmd = "\"" + cli + "\" train --config \"" + (configs / "smoke.json").string() + "\" --seed 5 --out \"" +
                              (tmp.path() / run).string() + "\" > /dev/null";
      rc |= std::system(cmd.c_str());
    }
    if (rc != 0) diff = "cli train failed";
    else diff = compare_trees(tmp.path() / "cli_a", tmp.path() / "cli_b", files);
    if (diff.empty()) via_cli = "cli reruns identical";
  }
  return {"reproducibility", diff.empty(),
          diff.empty() ? std::to_string(files) + " files bitwise identical across reruns (" + via_cli + ")" : diff};
}

Line service(const fs::path& work) {
  testutil::TempDir tmp;
  harness::ServiceOptions opt;
  opt.storage = tmp.path();
  const auto bim = work / "bimodal";
  harness::TaskModels m;
  m.task = std::make_shared<const BimodalTask>();
  m.student = std::make_shared<const nets::StudentNet>(nets::StudentNet::load(*m.task, bim / "br_student.json"));
  m.teacher = std::make_shared<const nets::TeacherNet>(nets::TeacherNet::load(*m.task, bim / "br_teacher.json"));
  opt.models[TaskKind::Bimodal] = m;
  harness::StudyService svc(opt);
  httplib::Server server;
  harness::register_routes(server, svc);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client cli("127.0.0.1", port);
  std::vector<std::string> problems;
  auto post = [&](const std::string& path, const json& body) {
    auto r = cli.Post(path, body.dump(), "application/json");
    if (!r) throw std::runtime_error("no response from " + path);
    return std::make_pair(r->status, json::parse(r->body));
  };
  auto get = [&](const std::string& path) {
    auto r = cli.Get(path);
    if (!r) throw std::runtime_error("no response from " + path);
    return std::make_pair(r->status, json::parse(r->body));
  };
  double accuracy = -1;
  try {
    // passive lifecycle; item 0 is (4, 8) and gets the (5,3,1,1,1) answer
    const auto id = post("/sessions", {{"task", "bimodal"}, {"condition", "teacher"}, {"mode", "passive"}}).second.at("session_id").get<std::string>();
    int n = 0;
    for (int a = 0; a < 5; ++a)
      for (int b = a + 1; b < 5; ++b, ++n) {
        const auto [st, item] = get("/sessions/" + id + "/item");
        if (st != 200 || item.at("stimuli").size() != 5 || item.contains("concept")) problems.push_back("bad item " + std::to_string(n));
        json ratings = json::array();
        for (int k = 0; k < 5; ++k) ratings.push_back(k == a || k == b ? 5 : 1);
        if (n == 0) ratings[1] = 3;
        if (post("/sessions/" + id + "/response", {{"ratings", ratings}}).first != 200) problems.push_back("response rejected");
      }
    const auto [st, result] = get("/sessions/" + id + "/result");
    accuracy = st == 200 ? result.at("accuracy").get<double>() : -1;
    if (std::abs(accuracy - 0.9) > 1e-12) problems.push_back("accuracy " + fmt(accuracy));
    if (post("/sessions/" + id + "/response", {{"ratings", {1, 1, 1, 1, 1}}}).first != 409) problems.push_back("completed session accepted a response");

    // interactive: same seed, different guesses
    const json req = {{"task", "bimodal"}, {"condition", "teacher"}, {"mode", "interactive"}, {"seed", 3}};
    const auto a = post("/sessions", req).second.at("session_id").get<std::string>();
    const auto b = post("/sessions", req).second.at("session_id").get<std::string>();
    get("/sessions/" + a + "/next-example");
    get("/sessions/" + b + "/next-example");
    post("/sessions/" + a + "/guess", {{"guess", {4.0, 20.0}}});
    post("/sessions/" + b + "/guess", {{"guess", {11.0, 12.0}}});
    const auto ea = get("/sessions/" + a + "/next-example").second.at("example");
    const auto eb = get("/sessions/" + b + "/next-example").second.at("example");
    if (ea == eb) problems.push_back("interactive emission ignores the guess");
  } catch (const std::exception& e) {
    problems.push_back(e.what());
  }
  server.stop();
  th.join();
  std::string detail = "passive accuracy " + fmt(accuracy) + " (expected 0.9 with the edge case)";
  for (const auto& p : problems) detail += "; " + p;
  return {"service contract", problems.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance runner"};
  std::string work, configs, stage = "all", cli;
  app.add_option("--work", work, "directory for trained runs")->required();
  app.add_option("--configs", configs, "directory holding <task>.json run configs")->required()->check(CLI::ExistingDirectory);
  app.add_option("--stage", stage, "train | check | all")->check(CLI::IsMember({"train", "check", "all"}));
  app.add_option("--cli", cli, "pedagogy CLI binary for the rerun check");
  CLI11_PARSE(app, argc, argv);

  try {
    if (stage != "check")
      for (const auto& t : kTasks) {
        const auto cfg = task_config(configs, work, t);
        if (!up_to_date(cfg)) train_task(cfg);
      }
    if (stage == "train") return 0;

    std::vector<Line> lines;
    auto guarded = [&](const std::string& name, auto fn) {
      try {
        lines.push_back(fn());
      } catch (const std::exception& e) {
        lines.push_back({name, false, std::string("error: ") + e.what()});
      }
    };
    guarded("gradient correctness", gradients);
    guarded("gumbel-softmax law", gumbel_law);
    guarded("rectangle", [&] { return rectangle(work); });
    guarded("bimodal", [&] { return bimodal(work); });
    guarded("boolean", [&] { return boolean(work); });
    guarded("hierarchy", [&] { return hierarchy(work); });
    guarded("oracle", oracle_checks_line);
    guarded("metric oracles", metric_oracles);
    guarded("reproducibility", [&] { return reproducibility(cli, configs); });
    guarded("service contract", [&] { return service(work); });

    std::size_t failed = 0;
    for (const auto& l : lines) {
      std::cout << (l.pass ? "PASS " : "FAIL ") << l.name << ": " << l.detail << '\n';
      failed += !l.pass;
    }
    std::cout << lines.size() - failed << "/" << lines.size() << " criteria pass" << std::endl;
    return failed == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
