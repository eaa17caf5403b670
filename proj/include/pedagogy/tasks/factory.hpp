#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pedagogy/tasks/bimodal.hpp"
#include "pedagogy/tasks/boolean.hpp"
#include "pedagogy/tasks/hierarchy.hpp"
#include "pedagogy/tasks/rectangle.hpp"

namespace pedagogy {

/// Where hierarchy concepts come from: an embedding manifest, or a synthetic tree.
struct HierarchyOptions {
  std::string manifest;                        // hier-v1 manifest; empty = synthetic
  std::vector<std::size_t> branching{3, 4};    // 1 + 3 + 12 = 16 concepts
  std::size_t embedding_dim = 32;
  std::uint64_t seed = 7;
};

inline std::shared_ptr<const Hierarchy> make_hierarchy(const HierarchyOptions& opt) {
  if (!opt.manifest.empty()) return std::make_shared<const Hierarchy>(load_embedding_hierarchy(opt.manifest));
  Rng rng(opt.seed);
  return std::make_shared<const Hierarchy>(build_synthetic_hierarchy(opt.branching, opt.embedding_dim, rng));
}

inline std::unique_ptr<Task> make_task(TaskKind kind, const HierarchyOptions& hier = {}) {
  switch (kind) {
    case TaskKind::Rectangle: return std::make_unique<RectangleTask>();
    case TaskKind::Bimodal: return std::make_unique<BimodalTask>();
    case TaskKind::Boolean: return std::make_unique<BooleanTask>();
    case TaskKind::Hierarchy: return std::make_unique<HierarchyTask>(make_hierarchy(hier));
  }
  throw std::invalid_argument("unknown task kind");
}

}  // namespace pedagogy
