#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pedagogy/nets/gru.hpp"
#include "pedagogy/num/checkpoint.hpp"
#include "pedagogy/tasks/task.hpp"

namespace pedagogy::nets {

inline constexpr std::size_t kDefaultHidden = 64;

namespace detail {

inline Tensor row_tensor(std::span<const double> v) { return Tensor::row(std::vector<double>(v.begin(), v.end())); }

inline void check_architecture(const nlohmann::json& meta, const char* role, const TaskSpec& spec,
                               std::size_t input_dim, std::size_t output_dim) {
  if (meta.value("role", "") != role)
    throw num::CheckpointError(std::string("checkpoint is not a ") + role + " network");
  if (meta.value("task", "") != to_string(spec.kind))
    throw num::CheckpointError("checkpoint was trained on task '" + meta.value("task", "") + "', not '" +
                               to_string(spec.kind) + "'");
  if (meta.value("input_dim", std::size_t{0}) != input_dim || meta.value("output_dim", std::size_t{0}) != output_dim)
    throw num::CheckpointError(std::string(role) + " checkpoint dimensions do not match the task");
}

}  // namespace detail

/// Recurrent student S: examples -> running concept guesses.
class StudentNet {
 public:
  StudentNet(const Task& task, std::size_t hidden, Rng& rng) : StudentNet(task, hidden) {
    cell_.init(params_, rng);
    head_.init(params_, rng);
  }

  StudentNet(const Task& task, ParamStore params, std::size_t hidden) : StudentNet(task, hidden) {
    for (const auto& n : expected_names())
      if (!params.contains(n)) throw num::CheckpointError("student parameters lack '" + n + "'");
    params_ = std::move(params);
  }

  static StudentNet load(const Task& task, const std::filesystem::path& manifest) {
    auto ck = num::load_checkpoint(manifest);
    const auto hidden = ck.meta.value("hidden", kDefaultHidden);
    detail::check_architecture(ck.meta, "student", task.spec(), task.spec().example_dim, task.spec().concept_dim);
    return StudentNet(task, std::move(ck.params), hidden);
  }

  void save(const std::filesystem::path& manifest) const { num::save_checkpoint(manifest, params_, architecture()); }

  nlohmann::json architecture() const {
    return {{"role", "student"},       {"task", to_string(spec_.kind)},       {"cell", "gru"},
            {"hidden", hidden_},       {"input_dim", spec_.example_dim},      {"output_dim", spec_.concept_dim},
            {"value_scale", spec_.value_scale}, {"discrete_input", spec_.discrete()}};
  }

  const TaskSpec& spec() const noexcept { return spec_; }
  std::size_t hidden() const noexcept { return hidden_; }
  const ParamStore& params() const noexcept { return params_; }
  ParamStore& params() noexcept { return params_; }

  NodeId zero_state(GraphScope& s, std::size_t batch) const {
    return s.graph.constant(Tensor::matrix(batch, hidden_));
  }

  /// F Wx for the candidate feature matrix F; computed once per graph and
  /// shared by every discrete step.
  NodeId candidate_projection(GraphScope& s) const {
    const NodeId f = s.graph.constant(task_->candidate_features());
    return cell_.project(s, params_, f);
  }

  /// `input` is B x example_dim (continuous) or B x candidate_count weights
  /// (discrete; pass the candidate projection). Returns (state', raw guess).
  std::pair<NodeId, NodeId> step(GraphScope& s, NodeId h, NodeId input, std::optional<NodeId> candidate_proj = {}) const {
    auto& g = s.graph;
    NodeId xproj;
    if (spec_.discrete()) {
      if (!candidate_proj) throw std::logic_error("discrete student step needs the candidate projection");
      require_dim(g.cols_of(input), spec_.candidate_count, "candidate weights");
      xproj = g.matmul(input, *candidate_proj);
    } else {
      require_dim(g.cols_of(input), spec_.example_dim, "example");
      xproj = cell_.project(s, params_, g.scale(input, 1.0 / spec_.value_scale));
    }
    const NodeId h2 = cell_.step(s, params_, h, xproj);
    NodeId out = head_.apply(s, params_, h2);
    if (spec_.value_scale != 1.0) out = g.scale(out, spec_.value_scale);
    return {h2, out};
  }

  /// The guess as the teacher sees it: probabilities for cross-entropy tasks, raw otherwise.
  NodeId guess_for_teacher(GraphScope& s, NodeId guess) const {
    return spec_.loss == LossKind::SoftmaxCrossEntropy ? s.graph.softmax(guess) : guess;
  }

  /// Single-episode inference step.
  std::pair<std::vector<double>, std::vector<double>> step(std::span<const double> state, const Example& e) const {
    require_dim(state.size(), hidden_, "student state");
    GraphScope s;
    const NodeId h = s.graph.constant(detail::row_tensor(state));
    std::pair<NodeId, NodeId> out;
    if (spec_.discrete()) {
      Tensor w = Tensor::matrix(1, spec_.candidate_count);
      if (e.candidate) {
        if (*e.candidate >= spec_.candidate_count) throw DimensionError("candidate index out of range");
        w(0, *e.candidate) = 1.0;
      } else {
        require_dim(e.features.size(), spec_.candidate_count, "candidate weights");
        w = detail::row_tensor(e.features);
      }
      const NodeId proj = candidate_projection(s);
      out = step(s, h, s.graph.constant(std::move(w)), proj);
    } else {
      require_dim(e.features.size(), spec_.example_dim, "example");
      out = step(s, h, s.graph.constant(detail::row_tensor(e.features)));
    }
    num::Bindings b;
    params_.bind_into(b);
    const auto v = num::forward(s.graph, b);
    return {v[out.first].data(), v[out.second].data()};
  }

  std::vector<double> initial_state() const { return std::vector<double>(hidden_, 0.0); }

 private:
  StudentNet(const Task& task, std::size_t hidden)
      : task_(&task),
        spec_(task.spec()),
        hidden_(hidden),
        cell_("student.gru", spec_.example_dim, hidden),
        head_("student.head", hidden, spec_.concept_dim) {}

  std::vector<std::string> expected_names() const {
    return {cell_.name("Wx"), cell_.name("Uzr"), cell_.name("Un"), cell_.name("b"), "student.head.W", "student.head.b"};
  }

  const Task* task_;
  TaskSpec spec_;
  std::size_t hidden_;
  GruCell cell_;
  AffineHead head_;
  ParamStore params_;
};

/// Recurrent teacher T: (concept, current guess) -> next example, or logits over candidates.
class TeacherNet {
 public:
  TeacherNet(const Task& task, std::size_t hidden, Rng& rng) : TeacherNet(task, hidden) {
    cell_.init(params_, rng);
    head_.init(params_, rng);
  }

  TeacherNet(const Task& task, ParamStore params, std::size_t hidden) : TeacherNet(task, hidden) {
    for (const auto& n : {cell_.name("Wx"), cell_.name("Uzr"), cell_.name("Un"), cell_.name("b"),
                          std::string("teacher.head.W"), std::string("teacher.head.b")})
      if (!params.contains(n)) throw num::CheckpointError("teacher parameters lack '" + n + "'");
    params_ = std::move(params);
  }

  static TeacherNet load(const Task& task, const std::filesystem::path& manifest) {
    auto ck = num::load_checkpoint(manifest);
    const auto hidden = ck.meta.value("hidden", kDefaultHidden);
    detail::check_architecture(ck.meta, "teacher", task.spec(), 2 * task.spec().concept_dim, emission_dim(task.spec()));
    return TeacherNet(task, std::move(ck.params), hidden);
  }

  void save(const std::filesystem::path& manifest) const { num::save_checkpoint(manifest, params_, architecture()); }

  nlohmann::json architecture() const {
    return {{"role", "teacher"},
            {"task", to_string(spec_.kind)},
            {"cell", "gru"},
            {"hidden", hidden_},
            {"input_dim", 2 * spec_.concept_dim},
            {"output_dim", emission_dim(spec_)},
            {"value_scale", spec_.value_scale},
            {"emission", spec_.discrete() ? "candidate-logits" : "continuous"}};
  }

  static std::size_t emission_dim(const TaskSpec& spec) {
    return spec.discrete() ? spec.candidate_count : spec.example_dim;
  }

  const TaskSpec& spec() const noexcept { return spec_; }
  std::size_t hidden() const noexcept { return hidden_; }
  const ParamStore& params() const noexcept { return params_; }
  ParamStore& params() noexcept { return params_; }

  NodeId zero_state(GraphScope& s, std::size_t batch) const {
    return s.graph.constant(Tensor::matrix(batch, hidden_));
  }

  /// concept, guess: B x concept_dim. Returns (state', emission).
  std::pair<NodeId, NodeId> step(GraphScope& s, NodeId h, NodeId concept_node, NodeId guess) const {
    auto& g = s.graph;
    require_dim(g.cols_of(concept_node), spec_.concept_dim, "concept");
    require_dim(g.cols_of(guess), spec_.concept_dim, "guess");
    NodeId in = g.concat({concept_node, guess});
    if (spec_.value_scale != 1.0) in = g.scale(in, 1.0 / spec_.value_scale);
    const NodeId h2 = cell_.step(s, params_, h, cell_.project(s, params_, in));
    NodeId out = head_.apply(s, params_, h2);
    if (!spec_.discrete() && spec_.value_scale != 1.0) out = g.scale(out, spec_.value_scale);
    return {h2, out};
  }

  std::pair<std::vector<double>, std::vector<double>> step(std::span<const double> state, std::span<const double> concept_v,
                                                           std::span<const double> guess) const {
    require_dim(state.size(), hidden_, "teacher state");
    require_dim(concept_v.size(), spec_.concept_dim, "concept");
    require_dim(guess.size(), spec_.concept_dim, "guess");
    GraphScope s;
    const auto out = step(s, s.graph.constant(detail::row_tensor(state)), s.graph.constant(detail::row_tensor(concept_v)),
                          s.graph.constant(detail::row_tensor(guess)));
    num::Bindings b;
    params_.bind_into(b);
    const auto v = num::forward(s.graph, b);
    return {v[out.first].data(), v[out.second].data()};
  }

  std::vector<double> initial_state() const { return std::vector<double>(hidden_, 0.0); }

 private:
  TeacherNet(const Task& task, std::size_t hidden)
      : spec_(task.spec()),
        hidden_(hidden),
        cell_("teacher.gru", 2 * spec_.concept_dim, hidden),
        head_("teacher.head", hidden, emission_dim(spec_)) {}

  TaskSpec spec_;
  std::size_t hidden_;
  GruCell cell_;
  AffineHead head_;
  ParamStore params_;
};

}  // namespace pedagogy::nets
