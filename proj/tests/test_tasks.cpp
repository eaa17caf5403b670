#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "pedagogy/tasks/factory.hpp"
#include "test_util.hpp"

using namespace pedagogy;

namespace {

// The ape subtree: ape -> {great ape -> {orangutan, gorilla, chimpanzee}, lesser ape -> {gibbon, siamang}}.
Hierarchy ape_tree(std::size_t dim = 4) {
  std::vector<HierarchyNode> nodes{{"ape", "ape", std::nullopt, {}, 0},      {"great", "great ape", 0, {}, 0},
                                   {"lesser", "lesser ape", 0, {}, 0},      {"orangutan", "orangutan", 1, {}, 0},
                                   {"gorilla", "gorilla", 1, {}, 0},        {"chimpanzee", "chimpanzee", 1, {}, 0},
                                   {"gibbon", "gibbon", 2, {}, 0},          {"siamang", "siamang", 2, {}, 0}};
  std::map<std::size_t, num::Tensor> emb;
  for (std::size_t leaf = 3; leaf < 8; ++leaf) emb[leaf] = num::Tensor::matrix(Hierarchy::kImagesPerLeaf, dim, double(leaf));
  return Hierarchy(std::move(nodes), std::move(emb));
}

}  // namespace

TEST(TaskSpec, Dimensions) {
  RectangleTask r;
  EXPECT_EQ(r.spec().concept_dim, 4u);
  EXPECT_EQ(r.spec().example_dim, 2u);
  EXPECT_EQ(r.spec().k_pretrain, 10u);
  EXPECT_EQ(r.spec().k_teach, 2u);
  EXPECT_FALSE(r.spec().discrete());
  EXPECT_EQ(r.spec().placement, LossPlacement::FinalStep);

  BimodalTask b;
  EXPECT_EQ(b.spec().concept_dim, 2u);
  EXPECT_EQ(b.spec().example_dim, 1u);
  EXPECT_EQ(b.spec().k_pretrain, 5u);
  EXPECT_EQ(b.spec().placement, LossPlacement::Summed);

  BooleanTask bo;
  EXPECT_EQ(bo.spec().concept_dim, 10u);
  EXPECT_EQ(bo.spec().candidate_count, 36u);
  EXPECT_EQ(bo.spec().k_pretrain, 5u);
  EXPECT_TRUE(bo.spec().discrete());

  Rng rng(1);
  HierarchyTask h(std::make_shared<const Hierarchy>(build_synthetic_hierarchy(std::vector<std::size_t>{3, 4}, 32, rng)));
  EXPECT_EQ(h.spec().concept_dim, 16u);
  EXPECT_EQ(h.spec().example_dim, 32u);
  EXPECT_EQ(h.spec().candidate_count, 120u);
  EXPECT_EQ(h.spec().loss, LossKind::SoftmaxCrossEntropy);
}

TEST(SampleConcept, RectangleSorted) {
  RectangleTask t;
  Rng rng(2);
  for (int i = 0; i < 10000; ++i) {
    const auto c = t.sample_concept(rng);
    EXPECT_LE(c[0], c[2]);
    EXPECT_LE(c[1], c[3]);
    for (double v : c) EXPECT_TRUE(v >= -10 && v <= 10);
  }
}

TEST(SampleConcept, BimodalMinMean) {
  BimodalTask t;
  Rng rng(3);
  double s = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto c = t.sample_concept(rng);
    ASSERT_LT(c[0], c[1]);
    s += c[0];
  }
  EXPECT_NEAR(s / 10000, 20.0 / 3.0, 0.3);
}

TEST(SampleConcept, BooleanNeverSetsTwoValuesInAGroup) {
  BooleanTask t;
  Rng rng(4);
  std::map<std::size_t, int> counts;
  for (int i = 0; i < 10000; ++i) {
    const auto c = t.sample_concept(rng);
    const auto bc = BooleanConcept::from_vector(c);  // throws on two values in a group
    EXPECT_GE(bc.constrained_count(), 1u);
    EXPECT_LE(bc.constrained_count(), 3u);
    EXPECT_LE(c[0] + c[1] + c[2], 1.0);
    EXPECT_LE(c[3] + c[4] + c[5], 1.0);
    ++counts[bc.constrained_count()];
  }
  for (std::size_t k = 1; k <= 3; ++k) EXPECT_NEAR(counts[k] / 10000.0, 1.0 / 3.0, 0.03);
}

TEST(SampleConcept, BooleanCurriculumRestriction) {
  BooleanTask t;
  Rng rng(5);
  const std::vector<int> three{3};
  for (int i = 0; i < 1000; ++i)
    EXPECT_EQ(BooleanConcept::from_vector(t.sample_concept_with_counts(three, rng)).constrained_count(), 3u);
  EXPECT_THROW(t.sample_concept_with_counts(std::vector<int>{4}, rng), std::invalid_argument);
}

TEST(SampleConcept, HierarchyUniformOverNodes) {
  Rng rng(6);
  HierarchyTask t(std::make_shared<const Hierarchy>(build_synthetic_hierarchy(std::vector<std::size_t>{3, 4}, 8, rng)));
  std::vector<int> hits(16, 0);
  for (int i = 0; i < 16000; ++i) ++hits[t.concept_node(t.sample_concept(rng))];
  for (int h : hits) EXPECT_NEAR(h, 1000, 150);
}

TEST(SampleExample, RectangleSupport) {
  RectangleTask t;
  Rng rng(7);
  const Concept c{0, 0, 10, 10};
  for (int i = 0; i < 1000; ++i) {
    const auto e = t.sample_example(c, rng);
    EXPECT_TRUE(e.features[0] >= 0 && e.features[0] <= 10 && e.features[1] >= 0 && e.features[1] <= 10);
  }
  const auto z = t.sample_example(Concept{0, 0, 0, 0}, rng);
  EXPECT_EQ(z.features, (std::vector<double>{0, 0}));
}

TEST(SampleExample, BimodalMixtureMean) {
  BimodalTask t;
  Rng rng(8);
  double s = 0;
  for (int i = 0; i < 10000; ++i) s += t.sample_example(Concept{4, 20}, rng).features[0];
  EXPECT_NEAR(s / 10000, 12.0, 0.2);
}

TEST(SampleExample, BooleanRedHasTwelveCandidates) {
  BooleanTask t;
  BooleanConcept red;
  red.required[1] = static_cast<int>(Color::Red);
  EXPECT_EQ(t.consistent_candidates(red).size(), 12u);
  Rng rng(9);
  std::set<std::size_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto e = t.sample_example(red.to_vector(), rng);
    EXPECT_TRUE(t.consistent(red.to_vector(), e));
    seen.insert(*e.candidate);
  }
  EXPECT_EQ(seen.size(), 12u);
}

TEST(SampleExample, AlwaysConsistentWithConcept) {
  Rng rng(10);
  HierarchyOptions hopt;
  hopt.embedding_dim = 8;
  for (auto kind : {TaskKind::Rectangle, TaskKind::Bimodal, TaskKind::Boolean, TaskKind::Hierarchy}) {
    const auto t = make_task(kind, hopt);
    for (int i = 0; i < 500; ++i) {
      const auto c = t->sample_concept(rng);
      EXPECT_TRUE(t->consistent(c, t->sample_example(c, rng))) << to_string(kind);
    }
  }
}

TEST(SampleExample, BooleanConsistentSubsetSizesAreProducts) {
  BooleanTask t;
  for (std::size_t k = 1; k <= 3; ++k)
    for (const auto& c : t.concepts_with_count(k)) {
      std::size_t expected = 1;
      for (std::size_t g = 0; g < 4; ++g)
        if (c.required[g] < 0) expected *= kGroupSizes[g];
      EXPECT_EQ(t.consistent_candidates(c).size(), expected);
    }
}

TEST(Loss, SquaredAndCrossEntropy) {
  BimodalTask b;
  EXPECT_DOUBLE_EQ(b.loss({4, 8}, std::vector<double>{4, 8}), 0.0);
  EXPECT_DOUBLE_EQ(b.loss({4, 8}, std::vector<double>{4, 9}), 1.0);
  RectangleTask r;
  EXPECT_THROW(r.loss({0, 0, 1, 1}, std::vector<double>{0, 0, 1}), DimensionError);

  Rng rng(11);
  HierarchyTask h(std::make_shared<const Hierarchy>(build_synthetic_hierarchy(std::vector<std::size_t>{3, 4}, 8, rng)));
  EXPECT_NEAR(h.loss(h.one_hot(3), std::vector<double>(16, 0.7)), std::log(16.0), 1e-12);
}

TEST(Render, DeterministicDistinctAndColoured) {
  std::vector<num::Tensor> imgs;
  for (std::size_t i = 0; i < 36; ++i) {
    const auto p = Properties::from_index(i);
    imgs.push_back(render_boolean_image(p));
    EXPECT_EQ(imgs.back(), render_boolean_image(p));
    EXPECT_EQ(imgs.back().shape(), (num::Shape{25, 25, 3}));
    for (double v : imgs.back().data()) EXPECT_TRUE(v >= 0 && v <= 1);
  }
  for (std::size_t i = 0; i < 36; ++i)
    for (std::size_t j = i + 1; j < 36; ++j) EXPECT_FALSE(imgs[i] == imgs[j]) << i << " vs " << j;

  const auto img = render_boolean_image({Size::Large, Color::Red, ShapeKind::Square, Border::None});
  const std::size_t centre = (12 * 25 + 12) * 3;
  EXPECT_EQ(img[centre], 1.0);
  EXPECT_EQ(img[centre + 1], 0.0);
  EXPECT_EQ(img[centre + 2], 0.0);
  // corner pixel stays white
  EXPECT_EQ(img[0], 1.0);
  EXPECT_EQ(img[1], 1.0);
  EXPECT_EQ(img[2], 1.0);
}

TEST(Render, BorderIsBlackOutline) {
  const auto img = render_boolean_image({Size::Large, Color::Blue, ShapeKind::Square, Border::Solid});
  const std::size_t edge = ((12 - 11) * 25 + 12) * 3;  // top edge of the half-side-11 square
  EXPECT_EQ(img[edge], 0.0);
  EXPECT_EQ(img[edge + 1], 0.0);
  EXPECT_EQ(img[edge + 2], 0.0);
  const std::size_t inner = ((12 - 10) * 25 + 12) * 3;
  EXPECT_EQ(img[inner + 2], 1.0);
}

TEST(Render, IncompleteAssignmentRejected) {
  std::vector<double> v(10, 0.0);
  v[0] = 1;  // size only
  EXPECT_THROW(Properties::from_vector(v), std::invalid_argument);
}

TEST(BooleanConsistent, Examples) {
  BooleanConcept red;
  red.required[1] = static_cast<int>(Color::Red);
  EXPECT_TRUE(boolean_consistent({Size::Small, Color::Red, ShapeKind::Circle, Border::Solid}, red));
  BooleanConcept red_circle = red;
  red_circle.required[2] = static_cast<int>(ShapeKind::Circle);
  EXPECT_FALSE(boolean_consistent({Size::Small, Color::Red, ShapeKind::Square, Border::Solid}, red_circle));
  BooleanConcept any;
  for (std::size_t i = 0; i < 36; ++i) EXPECT_TRUE(boolean_consistent(Properties::from_index(i), any));
  BooleanTask t;
  EXPECT_THROW(t.validate_concept(any.to_vector()), std::invalid_argument);
}

TEST(BooleanConcept, VectorRoundTrip) {
  for (std::size_t i = 0; i < 36; ++i) EXPECT_EQ(Properties::from_vector(Properties::from_index(i).to_vector()), Properties::from_index(i));
  BooleanTask t;
  for (std::size_t k = 1; k <= 3; ++k)
    for (const auto& c : t.concepts_with_count(k)) EXPECT_EQ(BooleanConcept::from_vector(c.to_vector()), c);
  std::vector<double> two_colours(10, 0.0);
  two_colours[3] = two_colours[4] = 1;
  EXPECT_THROW(BooleanConcept::from_vector(two_colours), std::invalid_argument);
}

TEST(SyntheticHierarchy, Counts) {
  Rng rng(12);
  const auto h = build_synthetic_hierarchy(2, 4, 16, rng);
  EXPECT_EQ(h.size(), 5u);
  EXPECT_EQ(h.candidate_count(), 40u);
  const auto h16 = build_synthetic_hierarchy(std::vector<std::size_t>{3, 4}, 16, rng);
  EXPECT_EQ(h16.size(), 16u);
  EXPECT_EQ(h16.interior_nodes().size(), 4u);
  for (std::size_t leaf : h16.leaves()) {
    const auto& e = h16.embeddings(leaf);
    for (std::size_t r = 0; r < e.rows(); ++r) {
      double n = 0;
      for (double v : e.row_values(r)) n += v * v;
      EXPECT_NEAR(std::sqrt(n), 1.0, 1e-6);
    }
  }
}

TEST(SyntheticHierarchy, SiblingCentroidsCloser) {
  Rng rng(13);
  std::size_t ok = 0, total = 0;
  for (int tree = 0; tree < 20; ++tree) {
    const auto h = build_synthetic_hierarchy(std::vector<std::size_t>{3, 4}, 32, rng);
    auto centroid = [&](std::size_t leaf) {
      const auto& e = h.embeddings(leaf);
      std::vector<double> c(e.cols(), 0.0);
      for (std::size_t r = 0; r < e.rows(); ++r)
        for (std::size_t j = 0; j < e.cols(); ++j) c[j] += e(r, j) / double(e.rows());
      return c;
    };
    auto dist = [](const std::vector<double>& a, const std::vector<double>& b) {
      double s = 0;
      for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
      return std::sqrt(s);
    };
    const auto& leaves = h.leaves();
    for (auto a : leaves)
      for (auto b : leaves)
        for (auto c : leaves) {
          if (a == b || a == c || b == c) continue;
          if (h.node(a).parent != h.node(b).parent || h.node(a).parent == h.node(c).parent) continue;
          ++total;
          ok += dist(centroid(a), centroid(b)) < dist(centroid(a), centroid(c));
        }
  }
  ASSERT_GT(total, 0u);
  EXPECT_GE(double(ok) / double(total), 0.95);
}

TEST(SyntheticHierarchy, InteriorExampleSetIsUnionOfChildren) {
  Rng rng(14);
  const auto h = build_synthetic_hierarchy(std::vector<std::size_t>{3, 4}, 8, rng);
  for (std::size_t n : h.interior_nodes()) {
    std::set<std::size_t> from_children;
    for (std::size_t c : h.node(n).children)
      for (std::size_t i : h.candidates_under(c)) from_children.insert(i);
    const auto mine = h.candidates_under(n);
    EXPECT_EQ(std::set<std::size_t>(mine.begin(), mine.end()), from_children);
  }
}

TEST(Hierarchy, LcaOnApeTree) {
  const auto h = ape_tree();
  const auto id = [&](const char* s) { return h.index_of(s); };
  EXPECT_EQ(h.lca(id("gibbon"), id("gibbon")), id("gibbon"));
  EXPECT_EQ(h.lca(id("orangutan"), id("siamang")), id("ape"));
  EXPECT_EQ(h.lca(id("siamang"), id("gibbon")), id("lesser"));
  EXPECT_EQ(h.lca(id("gorilla"), id("great")), id("great"));
  EXPECT_THROW(h.lca(0, 99), std::exception);
  // lesser apes' examples are siamang and gibbon images
  EXPECT_EQ(h.candidates_under(id("lesser")).size(), 20u);
}

TEST(Hierarchy, InvariantsRejected) {
  // interior node with a single child
  std::vector<HierarchyNode> nodes{{"r", "r", std::nullopt, {}, 0}, {"a", "a", 0, {}, 0}};
  std::map<std::size_t, num::Tensor> emb{{1, num::Tensor::matrix(10, 3)}};
  EXPECT_THROW(Hierarchy(nodes, emb), HierarchyError);
  // leaf with 9 embeddings
  std::vector<HierarchyNode> ok{{"r", "r", std::nullopt, {}, 0}, {"a", "a", 0, {}, 0}, {"b", "b", 0, {}, 0}};
  std::map<std::size_t, num::Tensor> nine{{1, num::Tensor::matrix(10, 3)}, {2, num::Tensor::matrix(9, 3)}};
  EXPECT_THROW(Hierarchy(ok, nine), HierarchyError);
  std::map<std::size_t, num::Tensor> dims{{1, num::Tensor::matrix(10, 3)}, {2, num::Tensor::matrix(10, 4)}};
  EXPECT_THROW(Hierarchy(ok, dims), HierarchyError);
}

TEST(Hierarchy, ExportReloadRoundTrip) {
  testutil::TempDir dir;
  Rng rng(15);
  const auto h = build_synthetic_hierarchy(std::vector<std::size_t>{3, 4}, 12, rng);
  const auto manifest = export_hierarchy(h, dir.path());
  EXPECT_TRUE(load_embedding_hierarchy(manifest) == h);
}

TEST(Hierarchy, FelineSizedManifestLoads) {
  testutil::TempDir dir;
  Rng rng(16);
  const auto h = build_synthetic_hierarchy(std::vector<std::size_t>{8, 6}, 4, rng);
  const auto loaded = load_embedding_hierarchy(export_hierarchy(h, dir.path()));
  EXPECT_EQ(loaded.size(), 57u);
  HierarchyOptions opt;
  opt.manifest = (dir.path() / "manifest.json").string();
  EXPECT_EQ(make_task(TaskKind::Hierarchy, opt)->spec().concept_dim, 57u);
}

TEST(Hierarchy, LoaderErrorsNamePathAndCounts) {
  testutil::TempDir dir;
  Rng rng(17);
  const auto h = build_synthetic_hierarchy(2, 2, 4, rng);
  const auto manifest = export_hierarchy(h, dir.path());
  // chop one embedding row (4 floats) off the first leaf file
  const auto leaf = dir.path() / "leaf_0.f32";
  std::filesystem::resize_file(leaf, 9 * 4 * 4);
  try {
    load_embedding_hierarchy(manifest);
    FAIL() << "9-embedding leaf accepted";
  } catch (const HierarchyError& e) {
    EXPECT_NE(std::string(e.what()).find("leaf_0.f32"), std::string::npos) << e.what();
  }
  std::filesystem::remove(leaf);
  EXPECT_THROW(load_embedding_hierarchy(manifest), HierarchyError);
  EXPECT_THROW(load_embedding_hierarchy(dir.path() / "nope.json"), HierarchyError);
}
