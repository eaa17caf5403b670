#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pedagogy/num/tensor.hpp"

namespace pedagogy {

using Rng = std::mt19937_64;

/// Native concept encoding: rectangle bounds, mode pair, property bits, or node one-hot.
using Concept = std::vector<double>;

enum class TaskKind { Rectangle, Bimodal, Boolean, Hierarchy };
enum class LossKind { SquaredError, SoftmaxCrossEntropy };
enum class LossPlacement { FinalStep, Summed };

inline const char* to_string(TaskKind k) {
  switch (k) {
    case TaskKind::Rectangle: return "rectangle";
    case TaskKind::Bimodal: return "bimodal";
    case TaskKind::Boolean: return "boolean";
    case TaskKind::Hierarchy: return "hierarchy";
  }
  return "?";
}

inline TaskKind parse_task_kind(const std::string& s) {
  if (s == "rectangle") return TaskKind::Rectangle;
  if (s == "bimodal") return TaskKind::Bimodal;
  if (s == "boolean") return TaskKind::Boolean;
  if (s == "hierarchy") return TaskKind::Hierarchy;
  throw std::invalid_argument("unknown task '" + s + "'");
}

inline const char* to_string(LossPlacement p) { return p == LossPlacement::FinalStep ? "final" : "summed"; }

inline LossPlacement parse_loss_placement(const std::string& s) {
  if (s == "final" || s == "final-step") return LossPlacement::FinalStep;
  if (s == "summed") return LossPlacement::Summed;
  throw std::invalid_argument("unknown loss placement '" + s + "'");
}

struct TaskSpec {
  TaskKind kind = TaskKind::Rectangle;
  std::size_t concept_dim = 0;
  std::size_t example_dim = 0;
  std::size_t candidate_count = 0;  // 0 for continuous tasks
  std::size_t k_pretrain = 0;
  std::size_t k_teach = 2;
  LossKind loss = LossKind::SquaredError;
  LossPlacement placement = LossPlacement::Summed;
  /// Network inputs are divided and continuous outputs multiplied by this.
  double value_scale = 1.0;

  bool discrete() const noexcept { return candidate_count > 0; }
};

/// A continuous example vector, or a candidate index with its feature row.
struct Example {
  std::vector<double> features;
  std::optional<std::size_t> candidate;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require_dim(std::size_t got, std::size_t expected, const char* what) {
  if (got != expected)
    throw DimensionError(std::string(what) + " has dimension " + std::to_string(got) + ", expected " +
                         std::to_string(expected));
}

class Task {
 public:
  virtual ~Task() = default;

  const TaskSpec& spec() const noexcept { return spec_; }
  TaskSpec& mutable_spec() noexcept { return spec_; }

  virtual Concept sample_concept(Rng& rng) const = 0;
  virtual Example sample_example(const Concept& c, Rng& rng) const = 0;
  virtual bool consistent(const Concept& c, const Example& e) const = 0;
  virtual void validate_concept(const Concept& c) const = 0;

  /// Non-negative task loss of a student guess (raw student output).
  virtual double loss(const Concept& c, std::span<const double> guess) const {
    require_dim(c.size(), spec_.concept_dim, "concept");
    require_dim(guess.size(), spec_.concept_dim, "guess");
    double s = 0;
    for (std::size_t i = 0; i < c.size(); ++i) s += (c[i] - guess[i]) * (c[i] - guess[i]);
    return s;
  }

  /// Candidate feature rows (discrete tasks only), shape candidate_count x example_dim.
  const num::Tensor& candidate_features() const {
    if (!spec_.discrete()) throw std::logic_error(std::string(to_string(spec_.kind)) + " task has no candidate set");
    return candidates_;
  }

  Example candidate_example(std::size_t index) const {
    const auto& f = candidate_features();
    if (index >= f.rows()) throw std::out_of_range("candidate index " + std::to_string(index) + " out of range");
    return Example{f.row_values(index), index};
  }

 protected:
  explicit Task(TaskSpec spec) : spec_(std::move(spec)) {}
  TaskSpec spec_;
  num::Tensor candidates_;
};

}  // namespace pedagogy
