#pragma once

// Reverse-mode automatic differentiation over rank-2 tensors.
//
// A ComputeGraph is a topologically ordered list of nodes; node ids are
// indices into that list, so every node's inputs precede it. Leaves are
// named parameters, named inputs or inline constants. forward() evaluates
// the graph against a set of bindings, backward() returns gradients of a
// scalar node with respect to the named parameter leaves.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pedagogy/num/tensor.hpp"

namespace pedagogy::num {

using NodeId = std::size_t;

enum class Op {
  Parameter,
  Input,
  Constant,
  MatMul,
  Add,
  Sub,
  Mul,
  Affine,
  Tanh,
  Sigmoid,
  Relu,
  Softmax,
  Concat,
  Slice,
  ReduceSum,
  SquaredError,
  SoftmaxCrossEntropy,
  StraightThrough,
};

inline const char* op_name(Op op) {
  switch (op) {
    case Op::Parameter: return "parameter";
    case Op::Input: return "input";
    case Op::Constant: return "constant";
    case Op::MatMul: return "matmul";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Affine: return "affine";
    case Op::Tanh: return "tanh";
    case Op::Sigmoid: return "sigmoid";
    case Op::Relu: return "relu";
    case Op::Softmax: return "softmax";
    case Op::Concat: return "concat";
    case Op::Slice: return "slice";
    case Op::ReduceSum: return "reduce_sum";
    case Op::SquaredError: return "squared_error";
    case Op::SoftmaxCrossEntropy: return "softmax_cross_entropy";
    case Op::StraightThrough: return "straight_through";
  }
  return "?";
}

/// Raised for malformed graphs, bad bindings and invalid backward requests.
class GraphError : public std::invalid_argument {
 public:
  GraphError(std::optional<NodeId> node, const std::string& what)
      : std::invalid_argument(node ? "node " + std::to_string(*node) + ": " + what : what), node_(node) {}
  std::optional<NodeId> node() const noexcept { return node_; }

 private:
  std::optional<NodeId> node_;
};

struct Node {
  Op op;
  std::vector<NodeId> inputs;
  std::size_t rows = 1;
  std::size_t cols = 1;
  std::string name{};      // Parameter / Input
  Tensor constant{};       // Constant
  double scale = 1.0;      // Affine
  double shift = 0.0;      // Affine
  std::size_t begin = 0;   // Slice
  std::size_t end = 0;     // Slice
};

class ComputeGraph {
 public:
  NodeId parameter(std::string name, std::size_t rows, std::size_t cols) {
    return leaf(Op::Parameter, std::move(name), rows, cols);
  }
  NodeId input(std::string name, std::size_t rows, std::size_t cols) {
    return leaf(Op::Input, std::move(name), rows, cols);
  }
  NodeId constant(Tensor value) {
    if (!value.is_matrix()) throw GraphError(next_id(), "constants must be rank-2, got " + to_string(value.shape()));
    Node n{Op::Constant, {}, value.rows(), value.cols()};
    n.constant = std::move(value);
    return push(std::move(n));
  }

  NodeId matmul(NodeId a, NodeId b) {
    check_ids({a, b});
    if (cols_of(a) != rows_of(b))
      throw GraphError(next_id(), "matmul inner dimensions differ: " + dims(a) + " x " + dims(b));
    return push(Node{Op::MatMul, {a, b}, rows_of(a), cols_of(b)});
  }
  /// Elementwise sum; `b` may also be a 1 x n row broadcast over the rows of `a`.
  NodeId add(NodeId a, NodeId b) { return binary_broadcast(Op::Add, a, b); }
  NodeId sub(NodeId a, NodeId b) { return binary_broadcast(Op::Sub, a, b); }
  NodeId mul(NodeId a, NodeId b) {
    check_ids({a, b});
    if (rows_of(a) != rows_of(b) || cols_of(a) != cols_of(b))
      throw GraphError(next_id(), "mul requires equal shapes: " + dims(a) + " vs " + dims(b));
    return push(Node{Op::Mul, {a, b}, rows_of(a), cols_of(a)});
  }
  /// scale * a + shift
  NodeId affine(NodeId a, double scale, double shift = 0.0) {
    check_ids({a});
    Node n{Op::Affine, {a}, rows_of(a), cols_of(a)};
    n.scale = scale;
    n.shift = shift;
    return push(std::move(n));
  }
  NodeId scale(NodeId a, double s) { return affine(a, s, 0.0); }
  NodeId tanh(NodeId a) { return unary(Op::Tanh, a); }
  NodeId sigmoid(NodeId a) { return unary(Op::Sigmoid, a); }
  NodeId relu(NodeId a) { return unary(Op::Relu, a); }
  /// Row-wise softmax.
  NodeId softmax(NodeId a) { return unary(Op::Softmax, a); }
  /// Forward: row-wise one-hot of the argmax. Backward: identity.
  NodeId straight_through(NodeId a) { return unary(Op::StraightThrough, a); }

  /// Column-wise concatenation.
  NodeId concat(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw GraphError(next_id(), "concat of nothing");
    check_ids(parts);
    std::size_t cols = 0;
    for (auto p : parts) {
      if (rows_of(p) != rows_of(parts.front()))
        throw GraphError(next_id(), "concat row counts differ: " + dims(parts.front()) + " vs " + dims(p));
      cols += cols_of(p);
    }
    return push(Node{Op::Concat, parts, rows_of(parts.front()), cols});
  }
  /// Columns [begin, end).
  NodeId slice(NodeId a, std::size_t begin, std::size_t end) {
    check_ids({a});
    if (begin >= end || end > cols_of(a))
      throw GraphError(next_id(), "slice [" + std::to_string(begin) + "," + std::to_string(end) +
                                      ") out of range for " + dims(a));
    Node n{Op::Slice, {a}, rows_of(a), end - begin};
    n.begin = begin;
    n.end = end;
    return push(std::move(n));
  }
  NodeId reduce_sum(NodeId a) {
    check_ids({a});
    return push(Node{Op::ReduceSum, {a}, 1, 1});
  }
  /// Sum over all entries of (a - b)^2.
  NodeId squared_error(NodeId a, NodeId b) {
    check_ids({a, b});
    if (rows_of(a) != rows_of(b) || cols_of(a) != cols_of(b))
      throw GraphError(next_id(), "squared_error requires equal shapes: " + dims(a) + " vs " + dims(b));
    return push(Node{Op::SquaredError, {a, b}, 1, 1});
  }
  /// Sum over rows of -sum_j target_j * log softmax(logits)_j.
  NodeId softmax_cross_entropy(NodeId logits, NodeId target) {
    check_ids({logits, target});
    if (rows_of(logits) != rows_of(target) || cols_of(logits) != cols_of(target))
      throw GraphError(next_id(), "softmax_cross_entropy requires equal shapes: " + dims(logits) + " vs " +
                                      dims(target));
    return push(Node{Op::SoftmaxCrossEntropy, {logits, target}, 1, 1});
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::size_t rows_of(NodeId id) const { return nodes_.at(id).rows; }
  std::size_t cols_of(NodeId id) const { return nodes_.at(id).cols; }

  /// Names of all parameter leaves, in first-use order.
  std::vector<std::string> parameter_names() const {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& n : nodes_)
      if (n.op == Op::Parameter && seen.insert(n.name).second) out.push_back(n.name);
    return out;
  }

 private:
  NodeId next_id() const noexcept { return nodes_.size(); }
  std::string dims(NodeId id) const {
    return std::to_string(rows_of(id)) + "x" + std::to_string(cols_of(id)) + " (node " + std::to_string(id) + ")";
  }
  void check_ids(const std::vector<NodeId>& ids) const {
    for (auto id : ids)
      if (id >= nodes_.size()) throw GraphError(next_id(), "input node " + std::to_string(id) + " does not exist");
  }
  NodeId push(Node n) {
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
  }
  NodeId leaf(Op op, std::string name, std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) throw GraphError(next_id(), "leaf '" + name + "' has an empty shape");
    Node n{op, {}, rows, cols};
    n.name = std::move(name);
    return push(std::move(n));
  }
  NodeId unary(Op op, NodeId a) {
    check_ids({a});
    return push(Node{op, {a}, rows_of(a), cols_of(a)});
  }
  NodeId binary_broadcast(Op op, NodeId a, NodeId b) {
    check_ids({a, b});
    const bool same = rows_of(a) == rows_of(b) && cols_of(a) == cols_of(b);
    const bool row_bias = rows_of(b) == 1 && cols_of(a) == cols_of(b);
    if (!same && !row_bias)
      throw GraphError(next_id(), std::string(op_name(op)) + " shapes incompatible: " + dims(a) + " vs " + dims(b));
    return push(Node{op, {a, b}, rows_of(a), cols_of(a)});
  }

  std::vector<Node> nodes_;
};

/// Name -> tensor map for graph leaves. Values are either owned or borrowed;
/// borrowed tensors must outlive every evaluation that uses the bindings.
class Bindings {
 public:
  void bind(const std::string& name, Tensor value) {
    owned_[name] = std::move(value);
    refs_[name] = &owned_[name];
  }
  void bind_ref(const std::string& name, const Tensor& value) {
    owned_.erase(name);
    refs_[name] = &value;
  }
  const Tensor* find(const std::string& name) const {
    auto it = refs_.find(name);
    return it == refs_.end() ? nullptr : it->second;
  }

 private:
  std::unordered_map<std::string, Tensor> owned_;
  std::unordered_map<std::string, const Tensor*> refs_;
};

using Values = std::vector<Tensor>;
using Gradients = std::map<std::string, Tensor>;

namespace detail {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

inline ConstMap view(const Tensor& t) { return ConstMap(t.ptr(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())); }
inline MutMap view(Tensor& t) { return MutMap(t.ptr(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())); }

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline void softmax_rows(const Tensor& in, Tensor& out) {
  const auto r = in.rows(), c = in.cols();
  for (std::size_t i = 0; i < r; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j) mx = std::max(mx, in(i, j));
    double z = 0;
    for (std::size_t j = 0; j < c; ++j) z += (out(i, j) = std::exp(in(i, j) - mx));
    for (std::size_t j = 0; j < c; ++j) out(i, j) /= z;
  }
}

inline double log_sum_exp_row(const Tensor& in, std::size_t i) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < in.cols(); ++j) mx = std::max(mx, in(i, j));
  double z = 0;
  for (std::size_t j = 0; j < in.cols(); ++j) z += std::exp(in(i, j) - mx);
  return mx + std::log(z);
}

inline bool broadcasts(const Tensor& a, const Tensor& b) { return b.rows() == 1 && a.rows() != 1; }

}  // namespace detail

/// Evaluates every node. Pure: neither the graph nor the bindings change.
inline Values forward(const ComputeGraph& graph, const Bindings& bindings) {
  using namespace detail;
  Values v;
  v.reserve(graph.size());
  for (NodeId id = 0; id < graph.size(); ++id) {
    const Node& n = graph.node(id);
    auto in = [&](std::size_t k) -> const Tensor& { return v[n.inputs[k]]; };
    Tensor out;
    switch (n.op) {
      case Op::Parameter:
      case Op::Input: {
        const Tensor* t = bindings.find(n.name);
        if (!t) throw GraphError(id, "unbound leaf '" + n.name + "'");
        if (!t->is_matrix() || t->rows() != n.rows || t->cols() != n.cols)
          throw GraphError(id, "binding '" + n.name + "' has shape " + to_string(t->shape()) + ", expected [" +
                                   std::to_string(n.rows) + "," + std::to_string(n.cols) + "]");
        out = *t;
        break;
      }
      case Op::Constant: out = n.constant; break;
      case Op::MatMul:
        out = Tensor::matrix(n.rows, n.cols);
        view(out).noalias() = view(in(0)) * view(in(1));
        break;
      case Op::Add:
      case Op::Sub: {
        out = in(0);
        const Tensor& b = in(1);
        const double sign = n.op == Op::Add ? 1.0 : -1.0;
        if (broadcasts(out, b)) {
          for (std::size_t i = 0; i < n.rows; ++i)
            for (std::size_t j = 0; j < n.cols; ++j) out(i, j) += sign * b(0, j);
        } else {
          for (std::size_t i = 0; i < out.size(); ++i) out[i] += sign * b[i];
        }
        break;
      }
      case Op::Mul:
        out = in(0);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= in(1)[i];
        break;
      case Op::Affine:
        out = in(0);
        for (auto& x : out.data()) x = n.scale * x + n.shift;
        break;
      case Op::Tanh:
        out = in(0);
        for (auto& x : out.data()) x = std::tanh(x);
        break;
      case Op::Sigmoid:
        out = in(0);
        for (auto& x : out.data()) x = sigmoid(x);
        break;
      case Op::Relu:
        out = in(0);
        for (auto& x : out.data()) x = x > 0 ? x : 0.0;
        break;
      case Op::Softmax:
        out = Tensor::matrix(n.rows, n.cols);
        softmax_rows(in(0), out);
        break;
      case Op::StraightThrough: {
        out = Tensor::matrix(n.rows, n.cols);
        const Tensor& a = in(0);
        for (std::size_t i = 0; i < n.rows; ++i) {
          std::size_t best = 0;
          for (std::size_t j = 1; j < n.cols; ++j)
            if (a(i, j) > a(i, best)) best = j;
          out(i, best) = 1.0;
        }
        break;
      }
      case Op::Concat: {
        out = Tensor::matrix(n.rows, n.cols);
        std::size_t offset = 0;
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          const Tensor& p = in(k);
          for (std::size_t i = 0; i < n.rows; ++i)
            std::copy_n(p.ptr() + i * p.cols(), p.cols(), out.ptr() + i * n.cols + offset);
          offset += p.cols();
        }
        break;
      }
      case Op::Slice: {
        out = Tensor::matrix(n.rows, n.cols);
        const Tensor& a = in(0);
        for (std::size_t i = 0; i < n.rows; ++i)
          std::copy_n(a.ptr() + i * a.cols() + n.begin, n.cols, out.ptr() + i * n.cols);
        break;
      }
      case Op::ReduceSum: {
        const auto& d = in(0).data();
        out = Tensor::scalar(std::accumulate(d.begin(), d.end(), 0.0));
        break;
      }
      case Op::SquaredError: {
        double s = 0;
        for (std::size_t i = 0; i < in(0).size(); ++i) {
          const double diff = in(0)[i] - in(1)[i];
          s += diff * diff;
        }
        out = Tensor::scalar(s);
        break;
      }
      case Op::SoftmaxCrossEntropy: {
        const Tensor& l = in(0);
        const Tensor& t = in(1);
        double s = 0;
        for (std::size_t i = 0; i < l.rows(); ++i) {
          const double lse = log_sum_exp_row(l, i);
          for (std::size_t j = 0; j < l.cols(); ++j) s -= t(i, j) * (l(i, j) - lse);
        }
        out = Tensor::scalar(s);
        break;
      }
    }
    v.push_back(std::move(out));
  }
  return v;
}

/// Gradients of the scalar node `loss` with respect to parameter leaves.
/// When `wrt` is given only those parameters are differentiated (others are
/// treated as constants and absent from the result).
inline Gradients backward(const ComputeGraph& graph, const Values& values, NodeId loss,
                          const std::set<std::string>* wrt = nullptr) {
  using namespace detail;
  if (loss >= graph.size()) throw GraphError(loss, "loss node does not exist");
  if (values.size() != graph.size()) throw GraphError(std::nullopt, "values do not come from this graph");
  if (graph.rows_of(loss) != 1 || graph.cols_of(loss) != 1)
    throw GraphError(loss, "loss node must be scalar, has shape " + std::to_string(graph.rows_of(loss)) + "x" +
                               std::to_string(graph.cols_of(loss)));

  const auto count = loss + 1;
  std::vector<char> needs(count, 0);
  for (NodeId id = 0; id < count; ++id) {
    const Node& n = graph.node(id);
    if (n.op == Op::Parameter) {
      needs[id] = !wrt || wrt->count(n.name);
    } else {
      for (auto i : n.inputs) needs[id] = needs[id] || needs[i];
    }
  }

  std::vector<std::optional<Tensor>> grad(count);
  grad[loss] = Tensor::scalar(1.0);
  auto accumulate = [&](NodeId target, Tensor&& g) {
    if (!needs[target]) return;
    if (!grad[target]) {
      grad[target] = std::move(g);
    } else {
      auto& acc = *grad[target];
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
    }
  };

  Gradients out;
  for (NodeId id = count; id-- > 0;) {
    if (!grad[id] || !needs[id]) continue;
    const Node& n = graph.node(id);
    const Tensor& g = *grad[id];
    const Tensor& y = values[id];
    auto x = [&](std::size_t k) -> const Tensor& { return values[n.inputs[k]]; };
    auto wants = [&](std::size_t k) { return needs[n.inputs[k]] != 0; };

    switch (n.op) {
      case Op::Parameter: {
        auto it = out.find(n.name);
        if (it == out.end()) {
          out.emplace(n.name, g);
        } else {
          for (std::size_t i = 0; i < g.size(); ++i) it->second[i] += g[i];
        }
        break;
      }
      case Op::Input:
      case Op::Constant: break;
      case Op::MatMul:
        if (wants(0)) {
          Tensor ga = Tensor::matrix(x(0).rows(), x(0).cols());
          view(ga).noalias() = view(g) * view(x(1)).transpose();
          accumulate(n.inputs[0], std::move(ga));
        }
        if (wants(1)) {
          Tensor gb = Tensor::matrix(x(1).rows(), x(1).cols());
          view(gb).noalias() = view(x(0)).transpose() * view(g);
          accumulate(n.inputs[1], std::move(gb));
        }
        break;
      case Op::Add:
      case Op::Sub: {
        const double sign = n.op == Op::Add ? 1.0 : -1.0;
        if (wants(0)) accumulate(n.inputs[0], Tensor(g));
        if (wants(1)) {
          if (broadcasts(x(0), x(1))) {
            Tensor gb = Tensor::matrix(1, n.cols);
            for (std::size_t i = 0; i < n.rows; ++i)
              for (std::size_t j = 0; j < n.cols; ++j) gb(0, j) += sign * g(i, j);
            accumulate(n.inputs[1], std::move(gb));
          } else {
            Tensor gb = g;
            if (sign < 0)
              for (auto& v : gb.data()) v = -v;
            accumulate(n.inputs[1], std::move(gb));
          }
        }
        break;
      }
      case Op::Mul:
        for (std::size_t k = 0; k < 2; ++k) {
          if (!wants(k)) continue;
          Tensor gk = g;
          const Tensor& other = x(1 - k);
          for (std::size_t i = 0; i < gk.size(); ++i) gk[i] *= other[i];
          accumulate(n.inputs[k], std::move(gk));
        }
        break;
      case Op::Affine: {
        Tensor ga = g;
        for (auto& v : ga.data()) v *= n.scale;
        accumulate(n.inputs[0], std::move(ga));
        break;
      }
      case Op::Tanh: {
        Tensor ga = g;
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= 1.0 - y[i] * y[i];
        accumulate(n.inputs[0], std::move(ga));
        break;
      }
      case Op::Sigmoid: {
        Tensor ga = g;
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= y[i] * (1.0 - y[i]);
        accumulate(n.inputs[0], std::move(ga));
        break;
      }
      case Op::Relu: {
        Tensor ga = g;
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= x(0)[i] > 0 ? 1.0 : 0.0;
        accumulate(n.inputs[0], std::move(ga));
        break;
      }
      case Op::Softmax: {
        Tensor ga = Tensor::matrix(n.rows, n.cols);
        for (std::size_t i = 0; i < n.rows; ++i) {
          double dot = 0;
          for (std::size_t j = 0; j < n.cols; ++j) dot += g(i, j) * y(i, j);
          for (std::size_t j = 0; j < n.cols; ++j) ga(i, j) = y(i, j) * (g(i, j) - dot);
        }
        accumulate(n.inputs[0], std::move(ga));
        break;
      }
      case Op::StraightThrough: accumulate(n.inputs[0], Tensor(g)); break;
      case Op::Concat: {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          const auto pc = x(k).cols();
          if (wants(k)) {
            Tensor gk = Tensor::matrix(n.rows, pc);
            for (std::size_t i = 0; i < n.rows; ++i) std::copy_n(g.ptr() + i * n.cols + offset, pc, gk.ptr() + i * pc);
            accumulate(n.inputs[k], std::move(gk));
          }
          offset += pc;
        }
        break;
      }
      case Op::Slice: {
        const Tensor& a = x(0);
        Tensor ga = Tensor::matrix(a.rows(), a.cols());
        for (std::size_t i = 0; i < n.rows; ++i)
          std::copy_n(g.ptr() + i * n.cols, n.cols, ga.ptr() + i * a.cols() + n.begin);
        accumulate(n.inputs[0], std::move(ga));
        break;
      }
      case Op::ReduceSum:
        accumulate(n.inputs[0], Tensor(x(0).shape(), g.item()));
        break;
      case Op::SquaredError: {
        const double s = g.item();
        Tensor ga = Tensor::matrix(x(0).rows(), x(0).cols());
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] = 2.0 * s * (x(0)[i] - x(1)[i]);
        if (wants(1)) {
          Tensor gb = ga;
          for (auto& v : gb.data()) v = -v;
          accumulate(n.inputs[1], std::move(gb));
        }
        if (wants(0)) accumulate(n.inputs[0], std::move(ga));
        break;
      }
      case Op::SoftmaxCrossEntropy: {
        const double s = g.item();
        const Tensor& l = x(0);
        const Tensor& t = x(1);
        if (wants(0)) {
          Tensor p = Tensor::matrix(l.rows(), l.cols());
          softmax_rows(l, p);
          for (std::size_t i = 0; i < l.rows(); ++i) {
            double mass = 0;
            for (std::size_t j = 0; j < l.cols(); ++j) mass += t(i, j);
            for (std::size_t j = 0; j < l.cols(); ++j) p(i, j) = s * (p(i, j) * mass - t(i, j));
          }
          accumulate(n.inputs[0], std::move(p));
        }
        if (wants(1)) {
          Tensor gt = Tensor::matrix(l.rows(), l.cols());
          for (std::size_t i = 0; i < l.rows(); ++i) {
            const double lse = log_sum_exp_row(l, i);
            for (std::size_t j = 0; j < l.cols(); ++j) gt(i, j) = -s * (l(i, j) - lse);
          }
          accumulate(n.inputs[1], std::move(gt));
        }
        break;
      }
    }
  }

  // Requested parameters that the loss does not reach get explicit zeros.
  for (NodeId id = 0; id < count; ++id) {
    const Node& n = graph.node(id);
    if (n.op == Op::Parameter && (!wrt || wrt->count(n.name)) && !out.count(n.name))
      out.emplace(n.name, Tensor::matrix(n.rows, n.cols));
  }
  return out;
}

}  // namespace pedagogy::num
