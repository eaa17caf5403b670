#pragma once

#include <algorithm>
#include <cmath>

#include "pedagogy/tasks/task.hpp"

namespace pedagogy {

/// Equal-weight mixture of N(mu1, 1) and N(mu2, 1) with 0 <= mu1 < mu2 <= 20.
struct BimodalConcept {
  double mu1 = 0, mu2 = 0;

  static constexpr double kUpper = 20.0;
  static constexpr double kSigma = 1.0;

  static BimodalConcept from_vector(std::span<const double> v) {
    require_dim(v.size(), 2, "bimodal concept");
    BimodalConcept b{v[0], v[1]};
    b.validate();
    return b;
  }
  Concept to_vector() const { return {mu1, mu2}; }
  void validate() const {
    if (!(mu1 < mu2)) throw std::invalid_argument("bimodal concept requires mu1 < mu2");
    if (mu1 < 0 || mu2 > kUpper) throw std::invalid_argument("bimodal modes outside [0, 20]");
  }

  double density(double x) const {
    constexpr double kNorm = 0.3989422804014327;  // 1/sqrt(2 pi)
    auto n = [](double z) { return kNorm * std::exp(-0.5 * z * z); };
    return 0.5 * n((x - mu1) / kSigma) / kSigma + 0.5 * n((x - mu2) / kSigma) / kSigma;
  }
};

class BimodalTask final : public Task {
 public:
  BimodalTask()
      : Task(TaskSpec{TaskKind::Bimodal, 2, 1, 0, 5, 2, LossKind::SquaredError, LossPlacement::Summed, 10.0}) {}

  Concept sample_concept(Rng& rng) const override {
    std::uniform_real_distribution<double> u(0.0, BimodalConcept::kUpper);
    for (;;) {
      const double a = u(rng), b = u(rng);
      if (a != b) return {std::min(a, b), std::max(a, b)};
    }
  }

  Example sample_example(const Concept& c, Rng& rng) const override {
    const auto b = BimodalConcept::from_vector(c);
    std::bernoulli_distribution pick(0.5);
    std::normal_distribution<double> noise(0.0, BimodalConcept::kSigma);
    const double mode = pick(rng) ? b.mu2 : b.mu1;
    return Example{{mode + noise(rng)}, std::nullopt};
  }

  // Gaussian support is the whole line.
  bool consistent(const Concept& c, const Example& e) const override {
    BimodalConcept::from_vector(c);
    require_dim(e.features.size(), 1, "bimodal example");
    return std::isfinite(e.features[0]);
  }

  void validate_concept(const Concept& c) const override { BimodalConcept::from_vector(c); }
};

}  // namespace pedagogy
