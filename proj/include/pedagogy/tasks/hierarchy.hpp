#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pedagogy/tasks/task.hpp"

namespace pedagogy {

struct HierarchyNode {
  std::string id;
  std::string name;
  std::optional<std::size_t> parent;
  std::vector<std::size_t> children;
  std::size_t depth = 0;
};

class HierarchyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rooted concept tree; leaves carry exactly ten example embeddings each.
/// A node's one-hot index is its position in nodes().
class Hierarchy {
 public:
  static constexpr std::size_t kImagesPerLeaf = 10;

  /// `nodes` only need id/name/parent filled in; `embeddings` maps leaf index -> 10 x dim.
  Hierarchy(std::vector<HierarchyNode> nodes, std::map<std::size_t, num::Tensor> embeddings)
      : nodes_(std::move(nodes)), embeddings_(std::move(embeddings)) {
    build();
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<HierarchyNode>& nodes() const noexcept { return nodes_; }
  const HierarchyNode& node(std::size_t i) const {
    check(i);
    return nodes_[i];
  }
  std::size_t root() const noexcept { return root_; }
  std::size_t embedding_dim() const noexcept { return dim_; }
  bool is_leaf(std::size_t i) const { return node(i).children.empty(); }
  const std::vector<std::size_t>& leaves() const noexcept { return leaves_; }
  std::vector<std::size_t> interior_nodes() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (!nodes_[i].children.empty()) out.push_back(i);
    return out;
  }
  const num::Tensor& embeddings(std::size_t leaf) const {
    auto it = embeddings_.find(leaf);
    if (it == embeddings_.end()) throw std::out_of_range("node " + std::to_string(leaf) + " is not a leaf");
    return it->second;
  }
  const std::map<std::size_t, num::Tensor>& all_embeddings() const noexcept { return embeddings_; }

  std::size_t index_of(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw std::out_of_range("unknown hierarchy node '" + id + "'");
    return it->second;
  }

  /// True when `a` is `b` or an ancestor of `b`.
  bool is_ancestor(std::size_t a, std::size_t b) const {
    check(a);
    check(b);
    for (std::optional<std::size_t> cur = b; cur; cur = nodes_[*cur].parent)
      if (*cur == a) return true;
    return false;
  }

  std::size_t lca(std::size_t a, std::size_t b) const {
    check(a);
    check(b);
    while (nodes_[a].depth > nodes_[b].depth) a = *nodes_[a].parent;
    while (nodes_[b].depth > nodes_[a].depth) b = *nodes_[b].parent;
    while (a != b) {
      a = *nodes_[a].parent;
      b = *nodes_[b].parent;
    }
    return a;
  }

  std::vector<std::size_t> descendant_leaves(std::size_t n) const {
    std::vector<std::size_t> out;
    for (auto leaf : leaves_)
      if (is_ancestor(n, leaf)) out.push_back(leaf);
    return out;
  }

  /// Candidate examples in leaf order, ten per leaf.
  std::size_t candidate_count() const noexcept { return leaves_.size() * kImagesPerLeaf; }
  std::size_t candidate_leaf(std::size_t candidate) const {
    if (candidate >= candidate_count()) throw std::out_of_range("candidate " + std::to_string(candidate) + " out of range");
    return leaves_[candidate / kImagesPerLeaf];
  }
  num::Tensor candidate_features() const {
    num::Tensor f = num::Tensor::matrix(candidate_count(), dim_);
    for (std::size_t li = 0; li < leaves_.size(); ++li) {
      const auto& e = embeddings_.at(leaves_[li]);
      std::copy(e.data().begin(), e.data().end(), f.ptr() + li * kImagesPerLeaf * dim_);
    }
    return f;
  }
  std::vector<std::size_t> candidates_under(std::size_t n) const {
    std::vector<std::size_t> out;
    for (std::size_t li = 0; li < leaves_.size(); ++li)
      if (is_ancestor(n, leaves_[li]))
        for (std::size_t j = 0; j < kImagesPerLeaf; ++j) out.push_back(li * kImagesPerLeaf + j);
    return out;
  }

  friend bool operator==(const Hierarchy& a, const Hierarchy& b) {
    if (a.nodes_.size() != b.nodes_.size()) return false;
    for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
      const auto &x = a.nodes_[i], &y = b.nodes_[i];
      if (x.id != y.id || x.name != y.name || x.parent != y.parent) return false;
    }
    return a.embeddings_ == b.embeddings_;
  }

 private:
  void check(std::size_t i) const {
    if (i >= nodes_.size()) throw std::out_of_range("unknown hierarchy node index " + std::to_string(i));
  }

  void build() {
    if (nodes_.empty()) throw HierarchyError("hierarchy has no nodes");
    std::optional<std::size_t> root;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      auto& n = nodes_[i];
      n.children.clear();
      if (!by_id_.emplace(n.id, i).second) throw HierarchyError("duplicate node id '" + n.id + "'");
      if (!n.parent) {
        if (root) throw HierarchyError("hierarchy has two roots: '" + nodes_[*root].id + "' and '" + n.id + "'");
        root = i;
      } else if (*n.parent >= nodes_.size() || *n.parent == i) {
        throw HierarchyError("node '" + n.id + "' has an invalid parent");
      }
    }
    if (!root) throw HierarchyError("hierarchy has no root");
    root_ = *root;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].parent) nodes_[*nodes_[i].parent].children.push_back(i);

    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      std::size_t d = 0;
      for (auto cur = nodes_[i].parent; cur; cur = nodes_[*cur].parent)
        if (++d > nodes_.size()) throw HierarchyError("hierarchy contains a cycle through '" + nodes_[i].id + "'");
      nodes_[i].depth = d;
    }

    dim_ = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto& n = nodes_[i];
      if (n.children.empty()) {
        leaves_.push_back(i);
        auto it = embeddings_.find(i);
        if (it == embeddings_.end()) throw HierarchyError("leaf '" + n.id + "' has no embeddings");
        const auto& e = it->second;
        if (!e.is_matrix() || e.rows() != kImagesPerLeaf)
          throw HierarchyError("leaf '" + n.id + "' has " + std::to_string(e.is_matrix() ? e.rows() : 0) +
                               " embeddings, expected " + std::to_string(kImagesPerLeaf));
        if (dim_ == 0) dim_ = e.cols();
        if (e.cols() != dim_)
          throw HierarchyError("leaf '" + n.id + "' embedding dimension " + std::to_string(e.cols()) + ", expected " +
                               std::to_string(dim_));
      } else {
        if (n.children.size() < 2) throw HierarchyError("interior node '" + n.id + "' has fewer than two children");
        if (embeddings_.count(i)) throw HierarchyError("interior node '" + n.id + "' carries embeddings");
      }
    }
  }

  std::vector<HierarchyNode> nodes_;
  std::map<std::size_t, num::Tensor> embeddings_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::vector<std::size_t> leaves_;
  std::size_t root_ = 0;
  std::size_t dim_ = 0;
};

/// Complete tree with per-level branching (branching.size() == depth - 1).
/// Node latents take a Gaussian step from their parent whose scale halves
/// with each level; leaf embeddings add N(0, 0.1) noise and are unit-normalised
/// (values rounded to float32 so they survive the on-disk format exactly).
inline Hierarchy build_synthetic_hierarchy(const std::vector<std::size_t>& branching, std::size_t embedding_dim,
                                           Rng& rng) {
  if (branching.empty()) throw std::invalid_argument("synthetic hierarchy needs depth >= 2");
  for (auto b : branching)
    if (b < 2) throw std::invalid_argument("synthetic hierarchy branching must be >= 2");
  if (embedding_dim == 0) throw std::invalid_argument("embedding dimension must be positive");

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<HierarchyNode> nodes;
  std::vector<std::vector<double>> latent;
  nodes.push_back({"n0", "n0", std::nullopt, {}, 0});
  latent.emplace_back(embedding_dim);
  for (auto& x : latent.back()) x = gauss(rng);

  std::vector<std::size_t> frontier{0};
  double sigma = 1.0;
  for (auto b : branching) {
    std::vector<std::size_t> next;
    for (auto parent : frontier) {
      for (std::size_t k = 0; k < b; ++k) {
        const auto id = nodes[parent].id + "." + std::to_string(k);
        nodes.push_back({id, id, parent, {}, 0});
        std::vector<double> z = latent[parent];
        for (auto& x : z) x += sigma * gauss(rng);
        latent.push_back(std::move(z));
        next.push_back(nodes.size() - 1);
      }
    }
    frontier = std::move(next);
    sigma *= 0.5;
  }

  std::map<std::size_t, num::Tensor> emb;
  for (auto leaf : frontier) {
    num::Tensor e = num::Tensor::matrix(Hierarchy::kImagesPerLeaf, embedding_dim);
    for (std::size_t r = 0; r < Hierarchy::kImagesPerLeaf; ++r) {
      double norm = 0;
      for (std::size_t j = 0; j < embedding_dim; ++j) {
        e(r, j) = latent[leaf][j] + 0.1 * gauss(rng);
        norm += e(r, j) * e(r, j);
      }
      norm = std::sqrt(norm);
      for (std::size_t j = 0; j < embedding_dim; ++j) e(r, j) = static_cast<float>(e(r, j) / norm);
    }
    emb.emplace(leaf, std::move(e));
  }
  return Hierarchy(std::move(nodes), std::move(emb));
}

/// depth levels (root = level 1), uniform branching.
inline Hierarchy build_synthetic_hierarchy(std::size_t depth, std::size_t branching, std::size_t embedding_dim, Rng& rng) {
  if (depth < 2) throw std::invalid_argument("synthetic hierarchy needs depth >= 2");
  return build_synthetic_hierarchy(std::vector<std::size_t>(depth - 1, branching), embedding_dim, rng);
}

inline constexpr const char* kHierarchyFormat = "hier-v1";

/// Writes manifest.json plus one little-endian float32 file per leaf.
inline std::filesystem::path export_hierarchy(const Hierarchy& h, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json nodes = nlohmann::json::array(), leaves = nlohmann::json::array();
  for (const auto& n : h.nodes())
    nodes.push_back({{"id", n.id}, {"name", n.name}, {"parent", n.parent ? nlohmann::json(h.node(*n.parent).id) : nlohmann::json()}});
  for (std::size_t li = 0; li < h.leaves().size(); ++li) {
    const auto leaf = h.leaves()[li];
    const auto file = "leaf_" + std::to_string(li) + ".f32";
    std::ofstream os(dir / file, std::ios::binary | std::ios::trunc);
    if (!os) throw HierarchyError("cannot write " + (dir / file).string());
    for (double v : h.embeddings(leaf).data()) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      const char bytes[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                             static_cast<char>((bits >> 16) & 0xff), static_cast<char>((bits >> 24) & 0xff)};
      os.write(bytes, 4);
    }
    leaves.push_back({{"id", h.node(leaf).id}, {"embedding_file", file}});
  }
  const auto manifest = dir / "manifest.json";
  std::ofstream js(manifest, std::ios::trunc);
  js << nlohmann::json{{"version", kHierarchyFormat}, {"nodes", nodes}, {"leaves", leaves}}.dump(2) << '\n';
  return manifest;
}

/// Embedding file paths are resolved relative to the manifest's directory.
inline Hierarchy load_embedding_hierarchy(const std::filesystem::path& manifest_path) {
  std::ifstream js(manifest_path);
  if (!js) throw HierarchyError("cannot open hierarchy manifest " + manifest_path.string());
  nlohmann::json m;
  try {
    js >> m;
  } catch (const nlohmann::json::exception& e) {
    throw HierarchyError(manifest_path.string() + ": " + e.what());
  }
  if (m.value("version", "") != kHierarchyFormat)
    throw HierarchyError(manifest_path.string() + ": expected version " + kHierarchyFormat);

  std::vector<HierarchyNode> nodes;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& n : m.at("nodes")) {
    const auto id = n.at("id").get<std::string>();
    index.emplace(id, nodes.size());
    nodes.push_back({id, n.value("name", id), std::nullopt, {}, 0});
  }
  std::size_t i = 0;
  for (const auto& n : m.at("nodes")) {
    if (n.contains("parent") && !n.at("parent").is_null()) {
      const auto pid = n.at("parent").get<std::string>();
      auto it = index.find(pid);
      if (it == index.end()) throw HierarchyError(manifest_path.string() + ": node '" + nodes[i].id + "' has unknown parent '" + pid + "'");
      nodes[i].parent = it->second;
    }
    ++i;
  }

  const auto base = manifest_path.parent_path();
  std::map<std::size_t, num::Tensor> emb;
  std::size_t dim = 0;
  for (const auto& l : m.at("leaves")) {
    const auto id = l.at("id").get<std::string>();
    auto it = index.find(id);
    if (it == index.end()) throw HierarchyError(manifest_path.string() + ": leaf entry for unknown node '" + id + "'");
    const auto path = base / l.at("embedding_file").get<std::string>();
    std::ifstream bin(path, std::ios::binary);
    if (!bin) throw HierarchyError("missing embedding file " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
    const std::size_t floats = bytes.size() / 4;
    if (bytes.size() % 4 != 0 || floats == 0 || floats % Hierarchy::kImagesPerLeaf != 0)
      throw HierarchyError(path.string() + ": " + std::to_string(bytes.size()) + " bytes is not " +
                           std::to_string(Hierarchy::kImagesPerLeaf) + " float32 rows");
    const std::size_t file_dim = floats / Hierarchy::kImagesPerLeaf;
    const std::size_t expected_dim = m.value("embedding_dim", dim);
    if (expected_dim != 0 && file_dim != expected_dim)
      throw HierarchyError(path.string() + ": embedding dimension " + std::to_string(file_dim) + ", expected " +
                           std::to_string(expected_dim));
    dim = file_dim;
    num::Tensor t = num::Tensor::matrix(Hierarchy::kImagesPerLeaf, file_dim);
    for (std::size_t k = 0; k < floats; ++k) {
      const std::uint32_t bits = std::uint32_t{bytes[4 * k]} | std::uint32_t{bytes[4 * k + 1]} << 8 |
                                 std::uint32_t{bytes[4 * k + 2]} << 16 | std::uint32_t{bytes[4 * k + 3]} << 24;
      t[k] = static_cast<double>(std::bit_cast<float>(bits));
    }
    emb.emplace(it->second, std::move(t));
  }
  try {
    return Hierarchy(std::move(nodes), std::move(emb));
  } catch (const HierarchyError& e) {
    throw HierarchyError(manifest_path.string() + ": " + e.what());
  }
}

class HierarchyTask final : public Task {
 public:
  explicit HierarchyTask(std::shared_ptr<const Hierarchy> h)
      : Task(TaskSpec{TaskKind::Hierarchy, h->size(), h->embedding_dim(), h->candidate_count(), 5, 2,
                      LossKind::SoftmaxCrossEntropy, LossPlacement::Summed, 1.0}),
        hierarchy_(std::move(h)) {
    candidates_ = hierarchy_->candidate_features();
  }

  const Hierarchy& hierarchy() const noexcept { return *hierarchy_; }
  std::shared_ptr<const Hierarchy> hierarchy_ptr() const noexcept { return hierarchy_; }

  Concept one_hot(std::size_t node) const {
    hierarchy_->node(node);
    Concept c(hierarchy_->size(), 0.0);
    c[node] = 1.0;
    return c;
  }

  std::size_t concept_node(const Concept& c) const {
    require_dim(c.size(), hierarchy_->size(), "hierarchy concept");
    std::optional<std::size_t> hot;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c[i] == 1.0 && !hot) hot = i;
      else if (c[i] != 0.0) throw std::invalid_argument("hierarchy concept is not a one-hot vector");
    }
    if (!hot) throw std::invalid_argument("hierarchy concept is not a one-hot vector");
    return *hot;
  }

  Concept sample_concept(Rng& rng) const override {
    std::uniform_int_distribution<std::size_t> pick(0, hierarchy_->size() - 1);
    return one_hot(pick(rng));
  }

  Example sample_example(const Concept& c, Rng& rng) const override {
    const auto ids = hierarchy_->candidates_under(concept_node(c));
    std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
    return candidate_example(ids[pick(rng)]);
  }

  bool consistent(const Concept& c, const Example& e) const override {
    if (!e.candidate) throw std::invalid_argument("hierarchy example without candidate index");
    return hierarchy_->is_ancestor(concept_node(c), hierarchy_->candidate_leaf(*e.candidate));
  }

  void validate_concept(const Concept& c) const override { concept_node(c); }

  /// Softmax cross-entropy between the one-hot concept and guess logits.
  double loss(const Concept& c, std::span<const double> guess) const override {
    require_dim(c.size(), spec_.concept_dim, "concept");
    require_dim(guess.size(), spec_.concept_dim, "guess");
    const double mx = *std::max_element(guess.begin(), guess.end());
    double z = 0;
    for (double g : guess) z += std::exp(g - mx);
    const double lse = mx + std::log(z);
    double s = 0;
    for (std::size_t i = 0; i < c.size(); ++i) s -= c[i] * (guess[i] - lse);
    return s;
  }

 private:
  std::shared_ptr<const Hierarchy> hierarchy_;
};

}  // namespace pedagogy
