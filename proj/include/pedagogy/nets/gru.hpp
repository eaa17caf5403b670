#pragma once

#include <map>
#include <string>

#include "pedagogy/num/graph.hpp"
#include "pedagogy/num/param_store.hpp"
#include "pedagogy/tasks/task.hpp"

namespace pedagogy::nets {

using num::ComputeGraph;
using num::NodeId;
using num::ParamStore;
using num::Tensor;

/// A graph under construction plus one leaf per parameter name, so every use
/// of a parameter within a graph shares a node.
class GraphScope {
 public:
  ComputeGraph graph;

  NodeId param(const ParamStore& store, const std::string& name) {
    auto it = leaves_.find(name);
    if (it != leaves_.end()) return it->second;
    const auto& t = store.at(name);
    const auto id = graph.parameter(name, t.rows(), t.cols());
    leaves_.emplace(name, id);
    return id;
  }

 private:
  std::map<std::string, NodeId> leaves_;
};

/// Gated recurrent cell (update + reset gates).
///   z = sigmoid(x Wx_z + h U_z + b_z), r = sigmoid(x Wx_r + h U_r + b_r)
///   n = tanh(x Wx_n + (r * h) U_n + b_n), h' = n + z * (h - n)
class GruCell {
 public:
  GruCell() = default;
  GruCell(std::string prefix, std::size_t input_dim, std::size_t hidden)
      : prefix_(std::move(prefix)), input_dim_(input_dim), hidden_(hidden) {}

  void init(ParamStore& store, Rng& rng) const {
    store.add_glorot(name("Wx"), input_dim_, 3 * hidden_, rng);
    store.add_glorot(name("Uzr"), hidden_, 2 * hidden_, rng);
    store.add_glorot(name("Un"), hidden_, hidden_, rng);
    store.add(name("b"), Tensor::matrix(1, 3 * hidden_));
  }

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t hidden() const noexcept { return hidden_; }

  /// x Wx for x of shape B x input_dim (bias is added in step()).
  NodeId project(GraphScope& s, const ParamStore& store, NodeId x) const {
    return s.graph.matmul(x, s.param(store, name("Wx")));
  }

  NodeId step(GraphScope& s, const ParamStore& store, NodeId h, NodeId xproj) const {
    auto& g = s.graph;
    const auto H = hidden_;
    const NodeId xb = g.add(xproj, s.param(store, name("b")));
    const NodeId hzr = g.matmul(h, s.param(store, name("Uzr")));
    const NodeId z = g.sigmoid(g.add(g.slice(xb, 0, H), g.slice(hzr, 0, H)));
    const NodeId r = g.sigmoid(g.add(g.slice(xb, H, 2 * H), g.slice(hzr, H, 2 * H)));
    const NodeId n = g.tanh(g.add(g.slice(xb, 2 * H, 3 * H), g.matmul(g.mul(r, h), s.param(store, name("Un")))));
    return g.add(n, g.mul(z, g.sub(h, n)));
  }

  std::string name(const char* leaf) const { return prefix_ + "." + leaf; }

 private:
  std::string prefix_;
  std::size_t input_dim_ = 0;
  std::size_t hidden_ = 0;
};

/// out = h W + b
class AffineHead {
 public:
  AffineHead() = default;
  AffineHead(std::string prefix, std::size_t in, std::size_t out) : prefix_(std::move(prefix)), in_(in), out_(out) {}

  void init(ParamStore& store, Rng& rng) const {
    store.add_glorot(prefix_ + ".W", in_, out_, rng);
    store.add(prefix_ + ".b", Tensor::matrix(1, out_));
  }
  NodeId apply(GraphScope& s, const ParamStore& store, NodeId h) const {
    return s.graph.add(s.graph.matmul(h, s.param(store, prefix_ + ".W")), s.param(store, prefix_ + ".b"));
  }
  std::size_t output_dim() const noexcept { return out_; }

 private:
  std::string prefix_;
  std::size_t in_ = 0;
  std::size_t out_ = 0;
};

}  // namespace pedagogy::nets
