#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pedagogy/nets/networks.hpp"
#include "pedagogy/num/param_store.hpp"
#include "pedagogy/tasks/factory.hpp"

namespace pedagogy::training {

struct TrainConfig {
  TaskKind task = TaskKind::Rectangle;
  HierarchyOptions hierarchy;
  std::size_t batch_size = 128;
  std::size_t student_iterations = 5000;
  std::size_t teacher_iterations = 5000;
  std::size_t joint_iterations = 10000;
  num::AdamConfig optimizer;
  double temperature_start = 1.0;
  double temperature_end = 0.5;
  std::optional<LossPlacement> loss_placement;  // unset = task default
  std::optional<LossPlacement> teacher_loss_placement;  // teaching rollouts; unset = loss_placement
  std::vector<std::vector<int>> curriculum{{3}, {2}, {1}};  // boolean only
  bool use_curriculum = true;
  std::uint64_t seed = 1;
  std::size_t extra_br_rounds = 0;
  std::size_t hidden = nets::kDefaultHidden;
  double clip_norm = 5.0;
  bool straight_through = false;
  bool greedy_eval = false;

  void validate() const {
    if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
    if (student_iterations == 0 || teacher_iterations == 0 || joint_iterations == 0)
      throw std::invalid_argument("iteration counts must be positive");
    if (!(temperature_start > 0) || !(temperature_end > 0)) throw std::invalid_argument("temperatures must be positive");
    if (hidden == 0) throw std::invalid_argument("hidden width must be positive");
    for (const auto& stage : curriculum)
      if (stage.empty()) throw std::invalid_argument("curriculum stage lists no property counts");
  }

  /// Temperature at iteration i of n, annealed linearly.
  double temperature(std::size_t i, std::size_t n) const {
    if (n <= 1) return temperature_end;
    return temperature_start + (temperature_end - temperature_start) * static_cast<double>(i) / static_cast<double>(n - 1);
  }

  LossPlacement teaching_placement(const Task& task) const { return teacher_loss_placement.value_or(task.spec().placement); }

  bool curriculum_active() const { return task == TaskKind::Boolean && use_curriculum && !curriculum.empty(); }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"task", to_string(c.task)},
       {"batch_size", c.batch_size},
       {"student_iterations", c.student_iterations},
       {"teacher_iterations", c.teacher_iterations},
       {"joint_iterations", c.joint_iterations},
       {"optimizer", {{"lr", c.optimizer.lr}, {"beta1", c.optimizer.beta1}, {"beta2", c.optimizer.beta2}, {"eps", c.optimizer.eps}}},
       {"temperature", {{"start", c.temperature_start}, {"end", c.temperature_end}}},
       {"curriculum", c.curriculum},
       {"use_curriculum", c.use_curriculum},
       {"seed", c.seed},
       {"extra_br_rounds", c.extra_br_rounds},
       {"hidden", c.hidden},
       {"clip_norm", c.clip_norm},
       {"straight_through", c.straight_through},
       {"greedy_eval", c.greedy_eval},
       {"hierarchy",
        {{"manifest", c.hierarchy.manifest},
         {"branching", c.hierarchy.branching},
         {"embedding_dim", c.hierarchy.embedding_dim},
         {"seed", c.hierarchy.seed}}}};
  if (c.loss_placement) j["loss_placement"] = to_string(*c.loss_placement);
  if (c.teacher_loss_placement) j["teacher_loss_placement"] = to_string(*c.teacher_loss_placement);
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  c = TrainConfig{};
  if (j.contains("task")) c.task = parse_task_kind(j.at("task").get<std::string>());
  c.batch_size = j.value("batch_size", c.batch_size);
  c.student_iterations = j.value("student_iterations", c.student_iterations);
  c.teacher_iterations = j.value("teacher_iterations", c.teacher_iterations);
  c.joint_iterations = j.value("joint_iterations", c.joint_iterations);
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    c.optimizer.lr = o.value("lr", c.optimizer.lr);
    c.optimizer.beta1 = o.value("beta1", c.optimizer.beta1);
    c.optimizer.beta2 = o.value("beta2", c.optimizer.beta2);
    c.optimizer.eps = o.value("eps", c.optimizer.eps);
  }
  if (j.contains("temperature")) {
    c.temperature_start = j.at("temperature").value("start", c.temperature_start);
    c.temperature_end = j.at("temperature").value("end", c.temperature_end);
  }
  if (j.contains("loss_placement")) c.loss_placement = parse_loss_placement(j.at("loss_placement").get<std::string>());
  if (j.contains("teacher_loss_placement"))
    c.teacher_loss_placement = parse_loss_placement(j.at("teacher_loss_placement").get<std::string>());
  if (j.contains("curriculum")) c.curriculum = j.at("curriculum").get<std::vector<std::vector<int>>>();
  c.use_curriculum = j.value("use_curriculum", c.use_curriculum);
  c.seed = j.value("seed", c.seed);
  c.extra_br_rounds = j.value("extra_br_rounds", c.extra_br_rounds);
  c.hidden = j.value("hidden", c.hidden);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  c.straight_through = j.value("straight_through", c.straight_through);
  c.greedy_eval = j.value("greedy_eval", c.greedy_eval);
  if (j.contains("hierarchy")) {
    const auto& h = j.at("hierarchy");
    c.hierarchy.manifest = h.value("manifest", c.hierarchy.manifest);
    c.hierarchy.branching = h.value("branching", c.hierarchy.branching);
    c.hierarchy.embedding_dim = h.value("embedding_dim", c.hierarchy.embedding_dim);
    c.hierarchy.seed = h.value("seed", c.hierarchy.seed);
  }
  c.validate();
}

inline TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  nlohmann::json j;
  in >> j;
  return j.get<TrainConfig>();
}

/// Task with the config's loss placement applied.
inline std::unique_ptr<Task> make_task(const TrainConfig& c) {
  auto task = pedagogy::make_task(c.task, c.hierarchy);
  if (c.loss_placement) task->mutable_spec().placement = *c.loss_placement;
  return task;
}

}  // namespace pedagogy::training
