#pragma once

// Config-driven experiment runs: train per regime, evaluate policies, write reports.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pedagogy/metrics/report.hpp"
#include "pedagogy/oracle/pedagogy.hpp"
#include "pedagogy/training/train.hpp"

namespace pedagogy::harness {

namespace fs = std::filesystem;

enum class Regime { BestResponse, Joint, RandomBaseline, Oracle };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::BestResponse: return "br";
    case Regime::Joint: return "joint";
    case Regime::RandomBaseline: return "random-baseline";
    case Regime::Oracle: return "oracle";
  }
  return "?";
}

inline Regime parse_regime(const std::string& s) {
  if (s == "br") return Regime::BestResponse;
  if (s == "joint") return Regime::Joint;
  if (s == "random-baseline") return Regime::RandomBaseline;
  if (s == "oracle") return Regime::Oracle;
  throw std::invalid_argument("unknown regime '" + s + "' (expected br, joint, random-baseline or oracle)");
}

struct ExperimentConfig {
  Regime regime = Regime::BestResponse;
  training::TrainConfig train;  // train.task is the experiment's task
  std::size_t eval_episodes = 1000;
  bool include_joint = false;  // br regime: also train a joint pair for the three-way comparison
  double oracle_alpha = 1.0;
  fs::path out = "out";

  void validate() const {
    train.validate();
    if (eval_episodes == 0) throw std::invalid_argument("eval_episodes must be positive");
    if (regime == Regime::Oracle && train.task != TaskKind::Boolean && train.task != TaskKind::Hierarchy)
      throw std::invalid_argument("the oracle regime needs a discrete task (boolean or hierarchy)");
  }
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = {{"regime", to_string(c.regime)}, {"train", c.train},           {"eval_episodes", c.eval_episodes},
       {"include_joint", c.include_joint}, {"oracle_alpha", c.oracle_alpha}, {"out", c.out.string()}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  c = ExperimentConfig{};
  if (j.contains("regime")) c.regime = parse_regime(j.at("regime").get<std::string>());
  if (j.contains("train")) c.train = j.at("train").get<training::TrainConfig>();
  // "task" and "seed" at top level are shorthands for the training fields.
  if (j.contains("task")) c.train.task = parse_task_kind(j.at("task").get<std::string>());
  if (j.contains("seed")) c.train.seed = j.at("seed").get<std::uint64_t>();
  c.eval_episodes = j.value("eval_episodes", c.eval_episodes);
  c.include_joint = j.value("include_joint", c.include_joint);
  c.oracle_alpha = j.value("oracle_alpha", c.oracle_alpha);
  if (j.contains("out")) c.out = j.at("out").get<std::string>();
}

inline ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config " + path.string() + ": " + e.what());
  }
  return j.get<ExperimentConfig>();
}

struct ExperimentResult {
  std::vector<metrics::StrategyReport> reports;
  nlohmann::json summary;
};

namespace detail {

inline void write_text(const fs::path& p, const std::string& body) {
  std::ofstream f(p, std::ios::trunc | std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << body;
  if (!f) throw std::runtime_error("write failed for " + p.string());
}

inline std::string history_csv(const training::LossHistory& h) {
  std::ostringstream os;
  os << std::setprecision(17) << "iteration,loss\n";
  for (std::size_t i = 0; i < h.size(); ++i) os << i << ',' << h[i] << '\n';
  return os.str();
}

inline void save_pair(const fs::path& dir, const std::string& tag, const training::TrainedPair& pair) {
  pair.student.save(dir / (tag + "_student.json"));
  pair.teacher.save(dir / (tag + "_teacher.json"));
  for (const auto& [phase, h] : pair.history) write_text(dir / (tag + "_loss_" + phase + ".csv"), history_csv(h));
}

inline std::string plot_csv(const std::vector<metrics::StrategyReport>& reports) {
  std::ostringstream os;
  os << std::setprecision(17) << "policy,metric,mean,std,match_rate,inside_rate,n\n";
  for (const auto& r : reports) {
    os << r.policy << ',' << r.metric_name << ',' << r.mean << ',' << r.std << ',';
    if (r.match_rate) os << *r.match_rate;
    os << ',' << r.inside_rate << ',' << r.n() << '\n';
  }
  return os.str();
}

/// Concept x candidate consistency for the discrete tasks.
inline oracle::DiscreteDomain task_domain(const Task& task) {
  if (const auto* b = dynamic_cast<const BooleanTask*>(&task)) {
    std::vector<BooleanConcept> cs;
    for (std::size_t k = 1; k <= 3; ++k)
      for (const auto& c : b->concepts_with_count(k)) cs.push_back(c);
    return oracle::boolean_domain(cs);
  }
  if (const auto* h = dynamic_cast<const HierarchyTask*>(&task)) {
    const auto& tree = h->hierarchy();
    oracle::Matrix m = oracle::Matrix::Zero(static_cast<Eigen::Index>(tree.size()),
                                            static_cast<Eigen::Index>(tree.candidate_count()));
    for (std::size_t n = 0; n < tree.size(); ++n)
      for (std::size_t i : tree.candidates_under(n)) m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i)) = 1.0;
    auto d = oracle::DiscreteDomain::from_consistency(std::move(m));
    for (std::size_t n = 0; n < tree.size(); ++n) d.concept_names[n] = tree.node(n).name;
    return d;
  }
  throw std::invalid_argument("no discrete domain for task " + std::string(to_string(task.spec().kind)));
}

}  // namespace detail

/// Trains per the regime, evaluates the applicable policies and writes into cfg.out:
/// checkpoints (<tag>_student.json/.bin, <tag>_teacher.json/.bin), loss histories,
/// <policy>_episodes.csv, <policy>_summary.json, plot_data.csv and summary.json.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out);
  const auto task = training::make_task(cfg.train);
  ExperimentResult res;
  res.summary = {{"config", cfg}, {"task", to_string(task->spec().kind)}, {"regime", to_string(cfg.regime)}};
  res.summary["config"].erase("out");

  if (cfg.regime == Regime::Oracle) {
    const auto domain = detail::task_domain(*task);
    const auto fixed = oracle::fixed_point(domain, {cfg.oracle_alpha, 10000, 1e-10});
    const auto single = oracle::single_step(domain, cfg.oracle_alpha);
    oracle::write_oracle_csv(cfg.out / "oracle_fixed_point", domain, fixed);
    oracle::write_oracle_csv(cfg.out / "oracle_single_step", domain, single);
    res.summary["oracle"] = {{"alpha", cfg.oracle_alpha},
                             {"iterations", fixed.iterations},
                             {"residual", fixed.residual},
                             {"converged", fixed.converged},
                             {"undefined_examples", fixed.undefined_examples.size()}};
    detail::write_text(cfg.out / "summary.json", res.summary.dump(2) + "\n");
    return res;
  }

  Rng eval_rng = training::detail::init_rng(cfg.train, 4);
  metrics::EvalOptions eval;
  eval.episodes = cfg.eval_episodes;
  eval.selection = {cfg.train.temperature_end, false, cfg.train.greedy_eval};

  auto add = [&](metrics::StrategyReport r) {
    r.write(cfg.out);
    res.summary["policies"][r.policy] = r.summary();
    res.reports.push_back(std::move(r));
  };

  switch (cfg.regime) {
    case Regime::RandomBaseline:
      add(metrics::evaluate_policy(metrics::Policy::Random, *task, nullptr, nullptr, eval_rng, eval));
      break;
    case Regime::BestResponse: {
      const auto br = training::train_best_response(*task, cfg.train);
      detail::save_pair(cfg.out, "br", br);
      add(metrics::evaluate_policy(metrics::Policy::Random, *task, &br.student, nullptr, eval_rng, eval));
      add(metrics::evaluate_policy(metrics::Policy::Teacher, *task, &br.student, &br.teacher, eval_rng, eval));
      if (cfg.include_joint) {
        const auto joint = training::train_joint_pair(*task, cfg.train);
        detail::save_pair(cfg.out, "joint", joint);
        add(metrics::evaluate_policy(metrics::Policy::Joint, *task, &joint.student, &joint.teacher, eval_rng, eval));
      }
      break;
    }
    case Regime::Joint: {
      const auto joint = training::train_joint_pair(*task, cfg.train);
      detail::save_pair(cfg.out, "joint", joint);
      add(metrics::evaluate_policy(metrics::Policy::Random, *task, nullptr, nullptr, eval_rng, eval));
      add(metrics::evaluate_policy(metrics::Policy::Joint, *task, &joint.student, &joint.teacher, eval_rng, eval));
      break;
    }
    case Regime::Oracle: break;
  }
  detail::write_text(cfg.out / "plot_data.csv", detail::plot_csv(res.reports));
  detail::write_text(cfg.out / "summary.json", res.summary.dump(2) + "\n");
  return res;
}

}  // namespace pedagogy::harness
