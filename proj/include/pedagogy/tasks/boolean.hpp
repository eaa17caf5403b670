#pragma once

#include <array>
#include <cstdlib>
#include <string>
#include <vector>

#include "pedagogy/tasks/task.hpp"

namespace pedagogy {

// Property groups, in concept-vector order:
//   size{small,medium,large} color{red,blue,green} shape{square,circle} border{solid,none}
inline constexpr std::array<std::size_t, 4> kGroupSizes{3, 3, 2, 2};
inline constexpr std::array<std::size_t, 4> kGroupOffsets{0, 3, 6, 8};
inline constexpr std::size_t kPropertyBits = 10;
inline constexpr std::size_t kBooleanCandidates = 36;
inline constexpr std::size_t kImageSide = 25;

enum class Size { Small = 0, Medium = 1, Large = 2 };
enum class Color { Red = 0, Blue = 1, Green = 2 };
enum class ShapeKind { Square = 0, Circle = 1 };
enum class Border { Solid = 0, None = 1 };

inline const char* kValueNames[kPropertyBits] = {"small", "medium", "large", "red",    "blue",
                                                 "green", "square", "circle", "border", "no-border"};

/// A full assignment, one value per property group.
struct Properties {
  Size size = Size::Small;
  Color color = Color::Red;
  ShapeKind shape = ShapeKind::Square;
  Border border = Border::Solid;

  std::array<int, 4> values() const {
    return {static_cast<int>(size), static_cast<int>(color), static_cast<int>(shape), static_cast<int>(border)};
  }

  /// Index into the 36-candidate enumeration (size-major).
  std::size_t index() const {
    const auto v = values();
    return ((static_cast<std::size_t>(v[0]) * 3 + static_cast<std::size_t>(v[1])) * 2 + static_cast<std::size_t>(v[2])) * 2 +
           static_cast<std::size_t>(v[3]);
  }

  static Properties from_index(std::size_t i) {
    if (i >= kBooleanCandidates) throw std::out_of_range("boolean candidate index " + std::to_string(i));
    Properties p;
    p.border = static_cast<Border>(i % 2);
    i /= 2;
    p.shape = static_cast<ShapeKind>(i % 2);
    i /= 2;
    p.color = static_cast<Color>(i % 3);
    p.size = static_cast<Size>(i / 3);
    return p;
  }

  /// 10-bit indicator with exactly one bit per group.
  std::vector<double> to_vector() const {
    std::vector<double> v(kPropertyBits, 0.0);
    const auto vals = values();
    for (std::size_t g = 0; g < 4; ++g) v[kGroupOffsets[g] + static_cast<std::size_t>(vals[g])] = 1.0;
    return v;
  }

  /// Throws unless `v` sets exactly one value in every group.
  static Properties from_vector(std::span<const double> v) {
    require_dim(v.size(), kPropertyBits, "property vector");
    std::array<int, 4> vals{};
    for (std::size_t g = 0; g < 4; ++g) {
      int found = -1;
      for (std::size_t j = 0; j < kGroupSizes[g]; ++j) {
        if (v[kGroupOffsets[g] + j] != 0.0) {
          if (found >= 0) throw std::invalid_argument("property group " + std::to_string(g) + " has two values");
          found = static_cast<int>(j);
        }
      }
      if (found < 0) throw std::invalid_argument("property group " + std::to_string(g) + " has no value");
      vals[g] = found;
    }
    return Properties{static_cast<Size>(vals[0]), static_cast<Color>(vals[1]), static_cast<ShapeKind>(vals[2]),
                      static_cast<Border>(vals[3])};
  }

  std::string describe() const {
    const auto v = values();
    std::string s;
    for (std::size_t g = 0; g < 4; ++g) s += (g ? " " : "") + std::string(kValueNames[kGroupOffsets[g] + static_cast<std::size_t>(v[g])]);
    return s;
  }

  friend bool operator==(const Properties&, const Properties&) = default;
};

/// Per group, the required value or -1 when unconstrained.
struct BooleanConcept {
  std::array<int, 4> required{-1, -1, -1, -1};

  std::size_t constrained_count() const {
    std::size_t n = 0;
    for (int r : required) n += r >= 0;
    return n;
  }

  /// Space-separated required values, e.g. "red square"; "any" when unconstrained.
  std::string describe() const {
    std::string s;
    for (std::size_t g = 0; g < 4; ++g) {
      if (required[g] < 0) continue;
      s += (s.empty() ? "" : " ") + std::string(kValueNames[kGroupOffsets[g] + static_cast<std::size_t>(required[g])]);
    }
    return s.empty() ? "any" : s;
  }

  Concept to_vector() const {
    Concept v(kPropertyBits, 0.0);
    for (std::size_t g = 0; g < 4; ++g)
      if (required[g] >= 0) v[kGroupOffsets[g] + static_cast<std::size_t>(required[g])] = 1.0;
    return v;
  }

  /// Accepts at most one set value per group; the all-zero vector is the unconstrained concept.
  static BooleanConcept from_vector(std::span<const double> v) {
    require_dim(v.size(), kPropertyBits, "boolean concept");
    BooleanConcept c;
    for (std::size_t g = 0; g < 4; ++g) {
      for (std::size_t j = 0; j < kGroupSizes[g]; ++j) {
        const double x = v[kGroupOffsets[g] + j];
        if (x != 0.0 && x != 1.0) throw std::invalid_argument("boolean concept entries must be 0 or 1");
        if (x == 1.0) {
          if (c.required[g] >= 0)
            throw std::invalid_argument("boolean concept sets two values of property group " + std::to_string(g));
          c.required[g] = static_cast<int>(j);
        }
      }
    }
    return c;
  }

  friend bool operator==(const BooleanConcept&, const BooleanConcept&) = default;
};

inline bool boolean_consistent(const Properties& p, const BooleanConcept& c) {
  const auto v = p.values();
  for (std::size_t g = 0; g < 4; ++g)
    if (c.required[g] >= 0 && c.required[g] != v[g]) return false;
  return true;
}

/// 25x25x3 raster in [0,1]: the shape centred on white, filled with the
/// pure colour, with a 1-px black outline when the border is solid.
inline num::Tensor render_boolean_image(const Properties& p) {
  static constexpr std::array<int, 3> kExtent{4, 8, 11};
  static constexpr std::array<std::array<double, 3>, 3> kRgb{{{1, 0, 0}, {0, 0, 1}, {0, 1, 0}}};
  constexpr int side = static_cast<int>(kImageSide);
  constexpr int centre = side / 2;
  const int r = kExtent[static_cast<std::size_t>(p.size)];

  auto inside = [&](int row, int col) {
    if (row < 0 || col < 0 || row >= side || col >= side) return false;
    const int dy = row - centre, dx = col - centre;
    if (p.shape == ShapeKind::Square) return std::abs(dx) <= r && std::abs(dy) <= r;
    return dx * dx + dy * dy <= r * r;
  };

  num::Tensor img({kImageSide, kImageSide, 3}, 1.0);
  const auto& rgb = kRgb[static_cast<std::size_t>(p.color)];
  for (int row = 0; row < side; ++row) {
    for (int col = 0; col < side; ++col) {
      if (!inside(row, col)) continue;
      const bool edge = !inside(row - 1, col) || !inside(row + 1, col) || !inside(row, col - 1) || !inside(row, col + 1);
      const auto base = (static_cast<std::size_t>(row) * kImageSide + static_cast<std::size_t>(col)) * 3;
      for (std::size_t ch = 0; ch < 3; ++ch)
        img[base + ch] = (p.border == Border::Solid && edge) ? 0.0 : rgb[ch];
    }
  }
  return img;
}

class BooleanTask final : public Task {
 public:
  BooleanTask()
      : Task(TaskSpec{TaskKind::Boolean, kPropertyBits, kImageSide * kImageSide * 3, kBooleanCandidates, 5, 2,
                      LossKind::SquaredError, LossPlacement::Summed, 1.0}) {
    candidates_ = num::Tensor::matrix(kBooleanCandidates, spec_.example_dim);
    for (std::size_t i = 0; i < kBooleanCandidates; ++i) {
      const auto img = render_boolean_image(Properties::from_index(i));
      std::copy(img.data().begin(), img.data().end(), candidates_.ptr() + i * spec_.example_dim);
    }
    enumerate_concepts();
  }

  /// Property count k uniform over {1,2,3}, then uniform over k-property concepts.
  Concept sample_concept(Rng& rng) const override {
    static constexpr std::array<int, 3> kAll{1, 2, 3};
    return sample_concept_with_counts(kAll, rng);
  }

  Concept sample_concept_with_counts(std::span<const int> counts, Rng& rng) const {
    if (counts.empty()) throw std::invalid_argument("no property counts to sample from");
    for (int k : counts)
      if (k < 1 || k > 3) throw std::invalid_argument("property count must be 1..3, got " + std::to_string(k));
    std::uniform_int_distribution<std::size_t> pick_k(0, counts.size() - 1);
    const auto& pool = by_count_[static_cast<std::size_t>(counts[pick_k(rng)])];
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    return pool[pick(rng)].to_vector();
  }

  /// All concepts with exactly k constrained properties.
  const std::vector<BooleanConcept>& concepts_with_count(std::size_t k) const { return by_count_.at(k); }

  std::vector<std::size_t> consistent_candidates(const BooleanConcept& c) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < kBooleanCandidates; ++i)
      if (boolean_consistent(Properties::from_index(i), c)) out.push_back(i);
    return out;
  }

  Example sample_example(const Concept& c, Rng& rng) const override {
    const auto ids = consistent_candidates(BooleanConcept::from_vector(c));
    if (ids.empty()) throw std::invalid_argument("boolean concept has no consistent candidates");
    std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
    return candidate_example(ids[pick(rng)]);
  }

  bool consistent(const Concept& c, const Example& e) const override {
    if (!e.candidate) throw std::invalid_argument("boolean example without candidate index");
    return boolean_consistent(Properties::from_index(*e.candidate), BooleanConcept::from_vector(c));
  }

  void validate_concept(const Concept& c) const override {
    const auto k = BooleanConcept::from_vector(c).constrained_count();
    if (k < 1 || k > 3) throw std::invalid_argument("boolean concept must constrain 1 to 3 properties");
  }

 private:
  void enumerate_concepts() {
    by_count_.assign(5, {});
    // Each group: -1 (free) or one of its values.
    for (int a = -1; a < 3; ++a)
      for (int b = -1; b < 3; ++b)
        for (int c = -1; c < 2; ++c)
          for (int d = -1; d < 2; ++d) {
            BooleanConcept bc{{a, b, c, d}};
            by_count_[bc.constrained_count()].push_back(bc);
          }
  }

  std::vector<std::vector<BooleanConcept>> by_count_;
};

}  // namespace pedagogy
