#pragma once

#include <algorithm>
#include <array>

#include "pedagogy/tasks/task.hpp"

namespace pedagogy {

struct RectangleConcept {
  double min_x = 0, min_y = 0, max_x = 0, max_y = 0;

  static constexpr double kBound = 10.0;

  static RectangleConcept from_vector(std::span<const double> v) {
    require_dim(v.size(), 4, "rectangle concept");
    RectangleConcept r{v[0], v[1], v[2], v[3]};
    r.validate();
    return r;
  }
  Concept to_vector() const { return {min_x, min_y, max_x, max_y}; }

  void validate() const {
    if (min_x > max_x || min_y > max_y) throw std::invalid_argument("rectangle has min > max");
    for (double v : {min_x, min_y, max_x, max_y})
      if (v < -kBound || v > kBound) throw std::invalid_argument("rectangle coordinate outside [-10, 10]");
  }

  bool contains(double x, double y) const { return x >= min_x && x <= max_x && y >= min_y && y <= max_y; }
};

class RectangleTask final : public Task {
 public:
  RectangleTask()
      : Task(TaskSpec{TaskKind::Rectangle, 4, 2, 0, 10, 2, LossKind::SquaredError, LossPlacement::FinalStep, 10.0}) {}

  Concept sample_concept(Rng& rng) const override {
    std::uniform_real_distribution<double> u(-RectangleConcept::kBound, RectangleConcept::kBound);
    const double x1 = u(rng), x2 = u(rng), y1 = u(rng), y2 = u(rng);
    return {std::min(x1, x2), std::min(y1, y2), std::max(x1, x2), std::max(y1, y2)};
  }

  Example sample_example(const Concept& c, Rng& rng) const override {
    const auto r = RectangleConcept::from_vector(c);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double x = r.min_x + (r.max_x - r.min_x) * u(rng);
    const double y = r.min_y + (r.max_y - r.min_y) * u(rng);
    return Example{{x, y}, std::nullopt};
  }

  bool consistent(const Concept& c, const Example& e) const override {
    require_dim(e.features.size(), 2, "rectangle example");
    return RectangleConcept::from_vector(c).contains(e.features[0], e.features[1]);
  }

  void validate_concept(const Concept& c) const override { RectangleConcept::from_vector(c); }
};

}  // namespace pedagogy
