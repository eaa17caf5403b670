#pragma once

// Joint optimization and best-response optimization of a teacher/student pair.

#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "pedagogy/nets/rollout.hpp"
#include "pedagogy/training/config.hpp"

namespace pedagogy::training {

using nets::GraphScope;
using nets::StudentNet;
using nets::TeacherNet;
using ConceptSampler = std::function<Concept(Rng&)>;
using LossHistory = std::vector<double>;

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& phase, std::size_t iteration)
      : std::runtime_error(phase + ": non-finite loss at iteration " + std::to_string(iteration)), iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

enum class TrainingMode { Joint, BestResponse };

inline const char* to_string(TrainingMode m) { return m == TrainingMode::Joint ? "joint" : "best-response"; }

struct TrainedPair {
  StudentNet student;
  TeacherNet teacher;
  TrainingMode mode;
  std::map<std::string, LossHistory> history;  // phase name -> per-iteration loss
};

namespace detail {

inline std::vector<Concept> sample_batch(const ConceptSampler& sampler, std::size_t n, Rng& rng) {
  std::vector<Concept> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sampler(rng));
  return out;
}

inline ConceptSampler prior_sampler(const Task& task) {
  return [&task](Rng& rng) { return task.sample_concept(rng); };
}

inline std::set<std::string> names_of(const num::ParamStore& store) {
  const auto n = store.names();
  return {n.begin(), n.end()};
}

/// One optimizer step on `store` from the graph's loss. Returns the loss value.
inline double apply_step(const GraphScope& s, num::NodeId loss, const num::Bindings& b, num::ParamStore& store,
                         const TrainConfig& cfg, const std::string& phase, std::size_t iteration) {
  const auto values = num::forward(s.graph, b);
  const double l = values[loss].item();
  if (!std::isfinite(l)) throw TrainingDiverged(phase, iteration);
  const auto wrt = names_of(store);
  auto grads = num::backward(s.graph, values, loss, &wrt);
  num::clip_global_norm(grads, cfg.clip_norm);
  num::adam_step(store, grads, cfg.optimizer);
  return l;
}

}  // namespace detail

/// Fits the student to episodes of prior-sampled examples (K_pretrain steps).
inline LossHistory train_student_on_prior(const Task& task, StudentNet& student, const TrainConfig& cfg, Rng& rng,
                                          std::size_t iterations, ConceptSampler sampler = {}) {
  if (!sampler) sampler = detail::prior_sampler(task);
  LossHistory hist;
  hist.reserve(iterations);
  for (std::size_t it = 0; it < iterations; ++it) {
    const auto concepts = detail::sample_batch(sampler, cfg.batch_size, rng);
    GraphScope s;
    const auto ep = nets::build_prior_episode(s, student, task, concepts, task.spec().k_pretrain, rng, task.spec().placement);
    num::Bindings b;
    student.params().bind_into(b);
    hist.push_back(detail::apply_step(s, ep.loss, b, student.params(), cfg, "student pretraining", it));
  }
  return hist;
}

/// Boolean-task curriculum: equal shares of `iterations` per stage, each stage
/// restricting concepts to the listed property counts (3, then 2, then 1 by default).
inline LossHistory run_curriculum(const Task& task, StudentNet& student, const TrainConfig& cfg, Rng& rng,
                                  std::size_t iterations) {
  const auto* boolean = dynamic_cast<const BooleanTask*>(&task);
  if (!boolean) throw std::invalid_argument("curriculum training is only defined for the boolean task");
  if (cfg.curriculum.empty()) throw std::invalid_argument("empty curriculum");
  LossHistory hist;
  const auto stages = cfg.curriculum.size();
  for (std::size_t st = 0; st < stages; ++st) {
    const auto share = iterations / stages + (st < iterations % stages ? 1 : 0);
    const auto counts = cfg.curriculum[st];
    auto h = train_student_on_prior(task, student, cfg, rng, share,
                                    [boolean, counts](Rng& r) { return boolean->sample_concept_with_counts(counts, r); });
    hist.insert(hist.end(), h.begin(), h.end());
  }
  return hist;
}

/// Best response of the teacher to a frozen student (K_teach steps). Only
/// teacher parameters receive gradients.
inline LossHistory train_teacher_best_response(const Task& task, TeacherNet& teacher, const StudentNet& student,
                                               const TrainConfig& cfg, Rng& rng, std::size_t iterations,
                                               ConceptSampler sampler = {}) {
  if (!sampler) sampler = detail::prior_sampler(task);
  LossHistory hist;
  hist.reserve(iterations);
  for (std::size_t it = 0; it < iterations; ++it) {
    const auto concepts = detail::sample_batch(sampler, cfg.batch_size, rng);
    nets::SelectionOptions sel{cfg.temperature(it, iterations), cfg.straight_through, cfg.greedy_eval};
    GraphScope s;
    const auto ep = nets::build_teach_episode(s, teacher, student, concepts, task.spec().k_teach, nets::RolloutMode::Train,
                                              sel, rng, cfg.teaching_placement(task));
    num::Bindings b;
    teacher.params().bind_into(b);
    student.params().bind_into(b);
    hist.push_back(detail::apply_step(s, ep.loss, b, teacher.params(), cfg, "teacher best response", it));
  }
  return hist;
}

/// Refits the student on episodes generated by a frozen teacher.
inline LossHistory train_student_against_teacher(const Task& task, StudentNet& student, const TeacherNet& teacher,
                                                 const TrainConfig& cfg, Rng& rng, std::size_t iterations) {
  const auto sampler = detail::prior_sampler(task);
  LossHistory hist;
  for (std::size_t it = 0; it < iterations; ++it) {
    const auto concepts = detail::sample_batch(sampler, cfg.batch_size, rng);
    nets::SelectionOptions sel{cfg.temperature_end, cfg.straight_through, cfg.greedy_eval};
    GraphScope s;
    const auto ep = nets::build_teach_episode(s, teacher, student, concepts, task.spec().k_teach, nets::RolloutMode::Train,
                                              sel, rng, cfg.teaching_placement(task));
    num::Bindings b;
    teacher.params().bind_into(b);
    student.params().bind_into(b);
    hist.push_back(detail::apply_step(s, ep.loss, b, student.params(), cfg, "student best response", it));
  }
  return hist;
}

/// Simultaneous updates of both networks from the same teacher-driven batch loss.
inline LossHistory train_joint(const Task& task, TeacherNet& teacher, StudentNet& student, const TrainConfig& cfg, Rng& rng,
                               std::size_t iterations) {
  const auto* boolean = dynamic_cast<const BooleanTask*>(&task);
  const bool staged = boolean && cfg.curriculum_active();
  const auto stages = staged ? cfg.curriculum.size() : 1;
  LossHistory hist;
  hist.reserve(iterations);
  std::size_t it = 0;
  for (std::size_t st = 0; st < stages; ++st) {
    const auto share = iterations / stages + (st < iterations % stages ? 1 : 0);
    ConceptSampler sampler = detail::prior_sampler(task);
    if (staged) {
      const auto counts = cfg.curriculum[st];
      sampler = [boolean, counts](Rng& r) { return boolean->sample_concept_with_counts(counts, r); };
    }
    for (std::size_t j = 0; j < share; ++j, ++it) {
      const auto concepts = detail::sample_batch(sampler, cfg.batch_size, rng);
      nets::SelectionOptions sel{cfg.temperature(it, iterations), cfg.straight_through, cfg.greedy_eval};
      GraphScope s;
      const auto ep = nets::build_teach_episode(s, teacher, student, concepts, task.spec().k_teach,
                                                nets::RolloutMode::Train, sel, rng, cfg.teaching_placement(task));
      num::Bindings b;
      teacher.params().bind_into(b);
      student.params().bind_into(b);
      const auto values = num::forward(s.graph, b);
      const double l = values[ep.loss].item();
      if (!std::isfinite(l)) throw TrainingDiverged("joint training", it);
      auto grads = num::backward(s.graph, values, ep.loss);
      num::Gradients gs, gt;
      for (auto& [name, g] : grads) (student.params().contains(name) ? gs : gt).emplace(name, std::move(g));
      num::clip_global_norm(gs, cfg.clip_norm);
      num::clip_global_norm(gt, cfg.clip_norm);
      num::adam_step(student.params(), gs, cfg.optimizer);
      num::adam_step(teacher.params(), gt, cfg.optimizer);
      hist.push_back(l);
    }
  }
  return hist;
}

namespace detail {

inline Rng init_rng(const TrainConfig& cfg, std::uint64_t stream) { return Rng(cfg.seed * 0x9E3779B97F4A7C15ULL + stream); }

}  // namespace detail

/// Student pretraining (curriculum for the boolean task), then the teacher's
/// best response, then `extra_br_rounds` alternating refits.
inline TrainedPair train_best_response(const Task& task, const TrainConfig& cfg) {
  cfg.validate();
  Rng init = detail::init_rng(cfg, 1);
  Rng rng = detail::init_rng(cfg, 2);
  TrainedPair out{StudentNet(task, cfg.hidden, init), TeacherNet(task, cfg.hidden, init), TrainingMode::BestResponse, {}};
  out.history["student"] = cfg.curriculum_active() ? run_curriculum(task, out.student, cfg, rng, cfg.student_iterations)
                                                   : train_student_on_prior(task, out.student, cfg, rng, cfg.student_iterations);
  out.history["teacher"] = train_teacher_best_response(task, out.teacher, out.student, cfg, rng, cfg.teacher_iterations);
  for (std::size_t r = 0; r < cfg.extra_br_rounds; ++r) {
    out.history["student_round" + std::to_string(r + 1)] =
        train_student_against_teacher(task, out.student, out.teacher, cfg, rng, cfg.student_iterations);
    out.history["teacher_round" + std::to_string(r + 1)] =
        train_teacher_best_response(task, out.teacher, out.student, cfg, rng, cfg.teacher_iterations);
  }
  return out;
}

inline TrainedPair train_joint_pair(const Task& task, const TrainConfig& cfg) {
  cfg.validate();
  Rng init = detail::init_rng(cfg, 1);
  Rng rng = detail::init_rng(cfg, 3);
  TrainedPair out{StudentNet(task, cfg.hidden, init), TeacherNet(task, cfg.hidden, init), TrainingMode::Joint, {}};
  out.history["joint"] = train_joint(task, out.teacher, out.student, cfg, rng, cfg.joint_iterations);
  return out;
}

}  // namespace pedagogy::training
