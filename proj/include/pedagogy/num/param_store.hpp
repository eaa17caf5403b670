#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "pedagogy/num/graph.hpp"
#include "pedagogy/num/tensor.hpp"

namespace pedagogy::num {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Named parameters plus adaptive-moment optimizer state.
class ParamStore {
 public:
  struct Entry {
    Tensor value;
    Tensor m;
    Tensor v;
  };

  void add(const std::string& name, Tensor value) {
    if (entries_.count(name)) throw std::invalid_argument("parameter '" + name + "' already exists");
    Tensor zeros(value.shape());
    entries_.emplace(name, Entry{std::move(value), zeros, zeros});
  }

  /// Glorot-uniform initialised matrix.
  void add_glorot(const std::string& name, std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> u(-limit, limit);
    Tensor t = Tensor::matrix(rows, cols);
    for (auto& x : t.data()) x = u(rng);
    add(name, std::move(t));
  }

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const Tensor& at(const std::string& name) const { return entry(name).value; }
  Tensor& at(const std::string& name) { return entry(name).value; }
  const Entry& entry(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::out_of_range("no parameter named '" + name + "'");
    return it->second;
  }
  Entry& entry(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::out_of_range("no parameter named '" + name + "'");
    return it->second;
  }

  const std::map<std::string, Entry>& entries() const noexcept { return entries_; }
  std::map<std::string, Entry>& entries() noexcept { return entries_; }
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : entries_) out.push_back(k);
    return out;
  }
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& [_, e] : entries_) n += e.value.size();
    return n;
  }

  std::uint64_t step() const noexcept { return step_; }
  void set_step(std::uint64_t s) noexcept { step_ = s; }
  void increment_step() noexcept { ++step_; }

  void bind_into(Bindings& b) const {
    for (const auto& [k, e] : entries_) b.bind_ref(k, e.value);
  }

  void zero_all() {
    for (auto& [_, e] : entries_) e.value.fill(0.0);
  }

  friend bool operator==(const ParamStore& a, const ParamStore& b) {
    if (a.step_ != b.step_ || a.entries_.size() != b.entries_.size()) return false;
    for (const auto& [k, e] : a.entries_) {
      auto it = b.entries_.find(k);
      if (it == b.entries_.end()) return false;
      if (!(e.value == it->second.value && e.m == it->second.m && e.v == it->second.v)) return false;
    }
    return true;
  }

 private:
  std::map<std::string, Entry> entries_;
  std::uint64_t step_ = 0;
};

/// Throws listing missing and extra names when `grads` does not cover `params` exactly.
inline void check_gradient_names(const ParamStore& params, const Gradients& grads) {
  std::string missing, extra;
  for (const auto& [k, _] : params.entries())
    if (!grads.count(k)) missing += (missing.empty() ? "" : ", ") + k;
  for (const auto& [k, _] : grads)
    if (!params.contains(k)) extra += (extra.empty() ? "" : ", ") + k;
  if (!missing.empty() || !extra.empty())
    throw std::invalid_argument("gradient names do not match parameters; missing: [" + missing + "] extra: [" +
                                extra + "]");
  for (const auto& [k, g] : grads)
    if (g.shape() != params.at(k).shape())
      throw ShapeError("gradient for '" + k + "' has shape " + to_string(g.shape()) + ", parameter has " +
                       to_string(params.at(k).shape()));
}

inline double global_norm(const Gradients& grads) {
  double s = 0;
  for (const auto& [_, g] : grads)
    for (double x : g.data()) s += x * x;
  return std::sqrt(s);
}

/// Rescales gradients in place so their global L2 norm is at most `max_norm`.
inline double clip_global_norm(Gradients& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (max_norm > 0 && norm > max_norm) {
    const double k = max_norm / norm;
    for (auto& [_, g] : grads)
      for (double& x : g.data()) x *= k;
  }
  return norm;
}

/// One bias-corrected adaptive-moment update; increments the step counter.
inline void adam_step(ParamStore& params, const Gradients& grads, const AdamConfig& cfg = {}) {
  check_gradient_names(params, grads);
  params.increment_step();
  const double t = static_cast<double>(params.step());
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& [name, e] : params.entries()) {
    const Tensor& g = grads.at(name);
    for (std::size_t i = 0; i < g.size(); ++i) {
      e.m[i] = cfg.beta1 * e.m[i] + (1.0 - cfg.beta1) * g[i];
      e.v[i] = cfg.beta2 * e.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      e.value[i] -= cfg.lr * (e.m[i] / c1) / (std::sqrt(e.v[i] / c2) + cfg.eps);
    }
  }
}

}  // namespace pedagogy::num
