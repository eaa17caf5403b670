#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "pedagogy/nets/gumbel.hpp"
#include "pedagogy/nets/networks.hpp"

namespace pedagogy::nets {

enum class RolloutMode { Train, Eval };

/// How discrete teachers pick candidates.
struct SelectionOptions {
  double temperature = 1.0;
  /// Train mode: forward a hard one-hot with straight-through gradients instead of the soft sample.
  bool straight_through_train = false;
  /// Eval mode: plain argmax of the logits instead of a Gumbel-max sample.
  bool greedy_eval = false;
};

struct StepRecord {
  Example example;
  std::vector<double> weights;  // relaxed selection weights (discrete tasks)
  std::vector<double> guess;    // raw student output after this example
};

struct EpisodeTrace {
  Concept concept_value;
  std::vector<StepRecord> steps;
  double final_loss = 0;
};

/// Node ids of a batched episode inside a graph.
struct EpisodeGraph {
  std::size_t batch = 0;
  std::vector<NodeId> inputs;     // what the student consumed: B x example_dim or B x candidate weights
  std::vector<NodeId> emissions;  // teacher outputs (empty for prior rollouts)
  std::vector<NodeId> guesses;    // B x concept_dim raw student outputs
  NodeId loss = 0;                // (1/B) * sum over batch and placed steps
};

inline Tensor stack_concepts(const std::vector<Concept>& concepts, std::size_t dim) {
  if (concepts.empty()) throw std::invalid_argument("empty concept batch");
  Tensor t = Tensor::matrix(concepts.size(), dim);
  for (std::size_t i = 0; i < concepts.size(); ++i) {
    require_dim(concepts[i].size(), dim, "concept");
    std::copy(concepts[i].begin(), concepts[i].end(), t.ptr() + i * dim);
  }
  return t;
}

inline NodeId episode_loss(GraphScope& s, const TaskSpec& spec, const std::vector<NodeId>& guesses, NodeId targets,
                           LossPlacement placement, std::size_t batch) {
  auto& g = s.graph;
  auto step_loss = [&](NodeId guess) {
    return spec.loss == LossKind::SoftmaxCrossEntropy ? g.softmax_cross_entropy(guess, targets)
                                                      : g.squared_error(guess, targets);
  };
  NodeId total = step_loss(guesses.back());
  if (placement == LossPlacement::Summed)
    for (std::size_t k = 0; k + 1 < guesses.size(); ++k) total = g.add(total, step_loss(guesses[k]));
  return g.scale(total, 1.0 / static_cast<double>(batch));
}

/// Teacher-driven episodes: e_k = T(c, guess_{k-1}), guess_k = S(e_k), guess_0 = 0.
inline EpisodeGraph build_teach_episode(GraphScope& s, const TeacherNet& teacher, const StudentNet& student,
                                        const std::vector<Concept>& concepts, std::size_t steps, RolloutMode mode,
                                        const SelectionOptions& sel, Rng& rng, LossPlacement placement) {
  if (steps < 1) throw std::invalid_argument("episode needs at least one step");
  const auto& spec = student.spec();
  if (teacher.spec().kind != spec.kind) throw DimensionError("teacher and student were built for different tasks");
  auto& g = s.graph;
  EpisodeGraph ep;
  ep.batch = concepts.size();
  const NodeId targets = g.constant(stack_concepts(concepts, spec.concept_dim));
  NodeId th = teacher.zero_state(s, ep.batch);
  NodeId sh = student.zero_state(s, ep.batch);
  NodeId guess_in = g.constant(Tensor::matrix(ep.batch, spec.concept_dim));
  std::optional<NodeId> proj;
  if (spec.discrete()) proj = student.candidate_projection(s);

  for (std::size_t k = 0; k < steps; ++k) {
    auto [th2, emission] = teacher.step(s, th, targets, guess_in);
    th = th2;
    NodeId input = emission;
    if (spec.discrete()) {
      if (mode == RolloutMode::Train) {
        input = gumbel_softmax(s, emission, sel.temperature, rng, sel.straight_through_train);
      } else if (sel.greedy_eval) {
        input = g.straight_through(emission);
      } else {
        input = gumbel_softmax(s, emission, sel.temperature, rng, true);
      }
    }
    auto [sh2, guess] = student.step(s, sh, input, proj);
    sh = sh2;
    ep.emissions.push_back(emission);
    ep.inputs.push_back(input);
    ep.guesses.push_back(guess);
    guess_in = student.guess_for_teacher(s, guess);
  }
  ep.loss = episode_loss(s, spec, ep.guesses, targets, placement, ep.batch);
  return ep;
}

/// Episodes whose examples come from the task's example prior. Discrete
/// examples are fed as exact one-hot candidate weights.
inline EpisodeGraph build_prior_episode(GraphScope& s, const StudentNet& student, const Task& task,
                                        const std::vector<Concept>& concepts, std::size_t steps, Rng& rng,
                                        LossPlacement placement, std::vector<std::vector<Example>>* sampled = nullptr) {
  if (steps < 1) throw std::invalid_argument("episode needs at least one step");
  const auto& spec = task.spec();
  auto& g = s.graph;
  EpisodeGraph ep;
  ep.batch = concepts.size();
  const NodeId targets = g.constant(stack_concepts(concepts, spec.concept_dim));
  NodeId sh = student.zero_state(s, ep.batch);
  std::optional<NodeId> proj;
  if (spec.discrete()) proj = student.candidate_projection(s);
  if (sampled) sampled->assign(ep.batch, {});

  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t width = spec.discrete() ? spec.candidate_count : spec.example_dim;
    Tensor x = Tensor::matrix(ep.batch, width);
    for (std::size_t i = 0; i < ep.batch; ++i) {
      Example e = task.sample_example(concepts[i], rng);
      if (spec.discrete()) {
        x(i, *e.candidate) = 1.0;
      } else {
        std::copy(e.features.begin(), e.features.end(), x.ptr() + i * width);
      }
      if (sampled) (*sampled)[i].push_back(std::move(e));
    }
    const NodeId input = g.constant(std::move(x));
    auto [sh2, guess] = student.step(s, sh, input, proj);
    sh = sh2;
    ep.inputs.push_back(input);
    ep.guesses.push_back(guess);
  }
  ep.loss = episode_loss(s, spec, ep.guesses, targets, placement, ep.batch);
  return ep;
}

namespace detail {

inline std::vector<EpisodeTrace> extract_traces(const Task& task, const std::vector<Concept>& concepts,
                                                const EpisodeGraph& ep, const num::Values& v) {
  const auto& spec = task.spec();
  std::vector<EpisodeTrace> traces(ep.batch);
  for (std::size_t i = 0; i < ep.batch; ++i) {
    auto& tr = traces[i];
    tr.concept_value = concepts[i];
    for (std::size_t k = 0; k < ep.guesses.size(); ++k) {
      StepRecord rec;
      const auto row = v[ep.inputs[k]].row_values(i);
      if (spec.discrete()) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < row.size(); ++j)
          if (row[j] > row[best]) best = j;
        rec.example = task.candidate_example(best);
        rec.weights = row;
      } else {
        rec.example = Example{row, std::nullopt};
      }
      rec.guess = v[ep.guesses[k]].row_values(i);
      tr.steps.push_back(std::move(rec));
    }
    tr.final_loss = task.loss(tr.concept_value, tr.steps.back().guess);
  }
  return traces;
}

}  // namespace detail

inline std::vector<EpisodeTrace> rollout_teach_batch(const TeacherNet& teacher, const StudentNet& student, const Task& task,
                                                     const std::vector<Concept>& concepts, std::size_t steps,
                                                     RolloutMode mode, Rng& rng, const SelectionOptions& sel = {}) {
  GraphScope s;
  const auto ep = build_teach_episode(s, teacher, student, concepts, steps, mode, sel, rng, task.spec().placement);
  num::Bindings b;
  teacher.params().bind_into(b);
  student.params().bind_into(b);
  return detail::extract_traces(task, concepts, ep, num::forward(s.graph, b));
}

inline EpisodeTrace rollout_teach(const TeacherNet& teacher, const StudentNet& student, const Task& task,
                                  const Concept& c, std::size_t steps, RolloutMode mode, Rng& rng,
                                  const SelectionOptions& sel = {}) {
  return rollout_teach_batch(teacher, student, task, {c}, steps, mode, rng, sel).front();
}

inline std::vector<EpisodeTrace> rollout_prior_batch(const StudentNet& student, const Task& task,
                                                     const std::vector<Concept>& concepts, std::size_t steps, Rng& rng) {
  GraphScope s;
  std::vector<std::vector<Example>> sampled;
  const auto ep = build_prior_episode(s, student, task, concepts, steps, rng, task.spec().placement, &sampled);
  num::Bindings b;
  student.params().bind_into(b);
  auto traces = detail::extract_traces(task, concepts, ep, num::forward(s.graph, b));
  // Keep the sampled continuous values exactly as drawn.
  for (std::size_t i = 0; i < traces.size(); ++i)
    for (std::size_t k = 0; k < steps; ++k) traces[i].steps[k].example = sampled[i][k];
  return traces;
}

inline EpisodeTrace rollout_prior(const StudentNet& student, const Concept& c, std::size_t steps, const Task& task, Rng& rng) {
  return rollout_prior_batch(student, task, {c}, steps, rng).front();
}

}  // namespace pedagogy::nets
