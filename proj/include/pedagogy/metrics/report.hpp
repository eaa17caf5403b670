#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pedagogy/metrics/metrics.hpp"
#include "pedagogy/nets/rollout.hpp"

namespace pedagogy::metrics {

enum class Policy { Random, Teacher, Joint };

inline const char* to_string(Policy p) {
  switch (p) {
    case Policy::Random: return "random";
    case Policy::Teacher: return "teacher";
    case Policy::Joint: return "joint";
  }
  return "?";
}

inline Policy parse_policy(const std::string& s) {
  if (s == "random") return Policy::Random;
  if (s == "teacher") return Policy::Teacher;
  if (s == "joint") return Policy::Joint;
  throw std::invalid_argument("unknown policy '" + s + "'");
}

struct EpisodeScore {
  double metric = 0;           // distance (continuous tasks) or 0/1 match flag
  std::optional<bool> match;   // discrete tasks
  double loss = std::numeric_limits<double>::quiet_NaN();  // final-guess task loss, NaN without a student
  double inside = 0;           // fraction of the episode's examples consistent with the concept
};

struct StrategyReport {
  std::string policy;
  std::string task;
  std::string metric_name;
  std::vector<EpisodeScore> episodes;
  double mean = 0;
  double std = 0;
  std::optional<double> match_rate;
  double inside_rate = 0;
  double mean_loss = std::numeric_limits<double>::quiet_NaN();

  std::size_t n() const noexcept { return episodes.size(); }

  void finalize() {
    const auto n = static_cast<double>(episodes.size());
    if (episodes.empty()) throw std::logic_error("report over zero episodes");
    double s = 0, in = 0, l = 0, matches = 0;
    for (const auto& e : episodes) {
      s += e.metric;
      in += e.inside;
      l += e.loss;
      matches += e.match.value_or(false);
    }
    mean = s / n;
    inside_rate = in / n;
    mean_loss = l / n;
    double var = 0;
    for (const auto& e : episodes) var += (e.metric - mean) * (e.metric - mean);
    std = std::sqrt(var / n);
    if (episodes.front().match) match_rate = matches / n;
  }

  nlohmann::json summary() const {
    nlohmann::json j = {{"policy", policy},   {"task", task},          {"metric", metric_name},
                        {"mean", mean},       {"std", std},            {"n", n()},
                        {"inside_rate", inside_rate}};
    j["match_rate"] = match_rate ? nlohmann::json(*match_rate) : nlohmann::json();
    j["mean_loss"] = std::isfinite(mean_loss) ? nlohmann::json(mean_loss) : nlohmann::json();
    return j;
  }

  std::string csv() const {
    std::ostringstream os;
    os << std::setprecision(17) << "episode,metric,match,loss,inside\n";
    for (std::size_t i = 0; i < episodes.size(); ++i) {
      const auto& e = episodes[i];
      os << i << ',' << e.metric << ',' << (e.match ? (*e.match ? "1" : "0") : "") << ',';
      if (std::isfinite(e.loss)) os << e.loss;
      os << ',' << e.inside << '\n';
    }
    return os.str();
  }

  void write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::ofstream(dir / (policy + "_episodes.csv"), std::ios::trunc) << csv();
    std::ofstream(dir / (policy + "_summary.json"), std::ios::trunc) << summary().dump(2) << '\n';
  }
};

inline const char* metric_name(TaskKind k) {
  switch (k) {
    case TaskKind::Rectangle: return "corner_distance";
    case TaskKind::Bimodal: return "mode_distance";
    case TaskKind::Boolean: return "intuitive_match";
    case TaskKind::Hierarchy: return "lca_match";
  }
  return "?";
}

/// Scores the two teaching examples of one episode against the task's intuitive strategy.
/// Discrete examples that are inconsistent with the concept count as a non-match.
inline EpisodeScore score_examples(const Task& task, const Concept& c, const Example& e1, const Example& e2) {
  EpisodeScore s;
  s.inside = (static_cast<double>(task.consistent(c, e1)) + static_cast<double>(task.consistent(c, e2))) / 2.0;
  switch (task.spec().kind) {
    case TaskKind::Rectangle:
      s.metric = corner_distance({e1.features[0], e1.features[1]}, {e2.features[0], e2.features[1]},
                                 RectangleConcept::from_vector(c));
      break;
    case TaskKind::Bimodal: s.metric = mode_distance(e1.features[0], e2.features[0], c[0], c[1]); break;
    case TaskKind::Boolean: {
      const auto bc = BooleanConcept::from_vector(c);
      const auto p1 = Properties::from_index(*e1.candidate), p2 = Properties::from_index(*e2.candidate);
      s.match = boolean_consistent(p1, bc) && boolean_consistent(p2, bc) && boolean_intuitive_match(p1, p2, bc);
      s.metric = *s.match ? 1.0 : 0.0;
      break;
    }
    case TaskKind::Hierarchy: {
      const auto& ht = dynamic_cast<const HierarchyTask&>(task);
      const auto& h = ht.hierarchy();
      s.match = lca_match(h, h.candidate_leaf(*e1.candidate), h.candidate_leaf(*e2.candidate), ht.concept_node(c));
      s.metric = *s.match ? 1.0 : 0.0;
      break;
    }
  }
  return s;
}

/// Concepts used for strategy evaluation: the task prior, except hierarchy
/// runs which draw uniformly from interior nodes (the LCA strategy is only
/// defined there).
inline Concept sample_eval_concept(const Task& task, Rng& rng) {
  if (task.spec().kind == TaskKind::Hierarchy) {
    const auto& ht = dynamic_cast<const HierarchyTask&>(task);
    const auto interior = ht.hierarchy().interior_nodes();
    std::uniform_int_distribution<std::size_t> pick(0, interior.size() - 1);
    return ht.one_hot(interior[pick(rng)]);
  }
  return task.sample_concept(rng);
}

struct EvalOptions {
  std::size_t episodes = 1000;
  std::size_t batch = 250;
  nets::SelectionOptions selection{0.5, false, false};
};

/// Runs eval rollouts of a policy and aggregates its intuitive-strategy metric
/// over the K_teach examples. The student is optional for the random policy
/// (no loss is recorded without it).
inline StrategyReport evaluate_policy(Policy policy, const Task& task, const nets::StudentNet* student,
                                      const nets::TeacherNet* teacher, Rng& rng, const EvalOptions& opt = {}) {
  const auto& spec = task.spec();
  if (spec.k_teach != 2) throw std::invalid_argument("strategy metrics are defined for two teaching examples");
  if (policy != Policy::Random && (!student || !teacher))
    throw std::invalid_argument(std::string(to_string(policy)) + " policy needs a trained student and teacher");
  if (student && student->spec().kind != spec.kind) throw std::invalid_argument("student was trained on another task");
  if (teacher && teacher->spec().kind != spec.kind) throw std::invalid_argument("teacher was trained on another task");

  StrategyReport rep;
  rep.policy = to_string(policy);
  rep.task = to_string(spec.kind);
  rep.metric_name = metric_name(spec.kind);
  for (std::size_t done = 0; done < opt.episodes;) {
    const auto n = std::min(opt.batch, opt.episodes - done);
    std::vector<Concept> concepts;
    for (std::size_t i = 0; i < n; ++i) concepts.push_back(sample_eval_concept(task, rng));

    std::vector<nets::EpisodeTrace> traces;
    if (policy == Policy::Random) {
      if (student) {
        traces = nets::rollout_prior_batch(*student, task, concepts, spec.k_teach, rng);
      } else {
        for (const auto& c : concepts) {
          nets::EpisodeTrace tr;
          tr.concept_value = c;
          for (std::size_t k = 0; k < spec.k_teach; ++k) tr.steps.push_back({task.sample_example(c, rng), {}, {}});
          tr.final_loss = std::numeric_limits<double>::quiet_NaN();
          traces.push_back(std::move(tr));
        }
      }
    } else {
      traces = nets::rollout_teach_batch(*teacher, *student, task, concepts, spec.k_teach, nets::RolloutMode::Eval, rng,
                                         opt.selection);
    }
    for (const auto& tr : traces) {
      auto s = score_examples(task, tr.concept_value, tr.steps[0].example, tr.steps[1].example);
      s.loss = tr.final_loss;
      rep.episodes.push_back(s);
    }
    done += n;
  }
  rep.finalize();
  return rep;
}

}  // namespace pedagogy::metrics
