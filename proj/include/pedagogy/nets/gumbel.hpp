#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "pedagogy/nets/gru.hpp"

namespace pedagogy::nets {

/// Standard Gumbel draw -log(-log u) with u strictly inside (0, 1).
inline double gumbel_draw(Rng& rng) {
  std::uniform_real_distribution<double> u(std::numeric_limits<double>::min(), 1.0);
  double x = u(rng);
  if (x >= 1.0) x = std::nextafter(1.0, 0.0);
  return -std::log(-std::log(x));
}

inline Tensor gumbel_noise(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t = Tensor::matrix(rows, cols);
  for (auto& x : t.data()) x = gumbel_draw(rng);
  return t;
}

inline void check_temperature(double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw std::invalid_argument("Gumbel-Softmax temperature must be positive, got " + std::to_string(temperature));
}

/// Relaxed one-hot sample softmax((logits + g) / temperature). In hard mode the
/// result is the exact one-hot of the perturbed argmax.
inline std::vector<double> gumbel_softmax(std::span<const double> logits, double temperature, Rng& rng, bool hard) {
  check_temperature(temperature);
  if (logits.empty()) throw std::invalid_argument("Gumbel-Softmax over zero categories");
  std::vector<double> y(logits.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!std::isfinite(logits[i])) throw std::invalid_argument("Gumbel-Softmax logits must be finite");
    y[i] = (logits[i] + gumbel_draw(rng)) / temperature;
    mx = std::max(mx, y[i]);
  }
  if (hard) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < y.size(); ++i)
      if (y[i] > y[best]) best = i;
    std::vector<double> out(y.size(), 0.0);
    out[best] = 1.0;
    return out;
  }
  double z = 0;
  for (auto& v : y) z += (v = std::exp(v - mx));
  for (auto& v : y) v /= z;
  return y;
}

/// Graph form. Hard mode is straight-through: forward is the one-hot, the
/// gradient is that of the soft sample.
inline NodeId gumbel_softmax(GraphScope& s, NodeId logits, double temperature, Rng& rng, bool hard) {
  check_temperature(temperature);
  auto& g = s.graph;
  const NodeId noise = g.constant(gumbel_noise(g.rows_of(logits), g.cols_of(logits), rng));
  const NodeId soft = g.softmax(g.scale(g.add(logits, noise), 1.0 / temperature));
  return hard ? g.straight_through(soft) : soft;
}

}  // namespace pedagogy::nets
