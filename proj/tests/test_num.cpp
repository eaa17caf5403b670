#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "pedagogy/num/checkpoint.hpp"
#include "pedagogy/num/graph.hpp"
#include "pedagogy/num/param_store.hpp"
#include "test_util.hpp"

using namespace pedagogy;
using namespace pedagogy::num;

TEST(Tensor, ShapeMustMatchData) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5, 0.0)), ShapeError);
  EXPECT_NO_THROW(Tensor({2, 3}, std::vector<double>(6, 0.0)));
  EXPECT_THROW(Tensor({0, 3}), ShapeError);
}

TEST(Forward, IdentityMatmulReturnsInput) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (std::size_t k : {1u, 2u, 5u}) {
    Tensor x = Tensor::matrix(3, k);
    for (auto& v : x.data()) v = n(rng);
    ComputeGraph g;
    const auto out = g.matmul(g.constant(Tensor::identity(3)), g.input("x", 3, k));
    Bindings b;
    b.bind("x", x);
    EXPECT_EQ(forward(g, b)[out], x);
  }
}

TEST(Forward, SoftmaxOfZerosIsUniform) {
  ComputeGraph g;
  const auto s = g.softmax(g.constant(Tensor::matrix(1, 3)));
  const auto v = forward(g, {})[s];
  for (double x : v.data()) EXPECT_NEAR(x, 1.0 / 3.0, 1e-15);
}

TEST(Forward, SquaredErrorByHand) {
  ComputeGraph g;
  const auto l = g.squared_error(g.constant(Tensor::matrix(1, 4)), g.constant(Tensor::matrix(1, 4, 1.0)));
  EXPECT_DOUBLE_EQ(forward(g, {})[l].item(), 4.0);
}

TEST(Forward, SoftmaxRowsAreDistributions) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 20);
  Tensor x = Tensor::matrix(50, 7);
  for (auto& v : x.data()) v = n(rng);
  ComputeGraph g;
  const auto s = g.softmax(g.constant(x));
  const auto v = forward(g, {})[s];
  for (std::size_t r = 0; r < 50; ++r) {
    double sum = 0;
    for (std::size_t c = 0; c < 7; ++c) {
      EXPECT_GE(v(r, c), 0.0);
      sum += v(r, c);
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Forward, ShapeMismatchNamesNode) {
  ComputeGraph g;
  const auto a = g.input("a", 2, 3);
  const auto b = g.input("b", 2, 3);
  try {
    g.matmul(a, b);
    FAIL() << "matmul of 2x3 by 2x3 accepted";
  } catch (const GraphError& e) {
    ASSERT_TRUE(e.node().has_value());
    EXPECT_EQ(*e.node(), g.size());
  }
  EXPECT_THROW(g.add(a, g.input("c", 3, 3)), GraphError);
}

TEST(Forward, UnboundLeafRejected) {
  ComputeGraph g;
  g.tanh(g.input("x", 1, 2));
  EXPECT_THROW(forward(g, {}), GraphError);
}

TEST(Forward, BindingWithWrongShapeRejected) {
  ComputeGraph g;
  g.tanh(g.input("x", 1, 2));
  Bindings b;
  b.bind("x", Tensor::matrix(2, 2));
  EXPECT_THROW(forward(g, b), GraphError);
}

TEST(Forward, PureAndDeterministic) {
  ComputeGraph g;
  const auto x = g.parameter("x", 2, 2);
  const auto l = g.reduce_sum(g.tanh(g.matmul(x, x)));
  Tensor xv({2, 2}, std::vector<double>{0.1, -0.3, 0.7, 0.2});
  const Tensor before = xv;
  Bindings b;
  b.bind_ref("x", xv);
  const auto v1 = forward(g, b);
  const auto v2 = forward(g, b);
  EXPECT_EQ(xv, before);
  for (NodeId i = 0; i < g.size(); ++i) EXPECT_EQ(v1[i], v2[i]);
  EXPECT_EQ(backward(g, v1, l).at("x"), backward(g, v2, l).at("x"));
}

TEST(Backward, SquareAtThree) {
  ComputeGraph g;
  const auto x = g.parameter("x", 1, 1);
  const auto l = g.mul(x, x);
  Bindings b;
  b.bind("x", Tensor::scalar(3.0));
  EXPECT_DOUBLE_EQ(backward(g, forward(g, b), l).at("x").item(), 6.0);
}

TEST(Backward, SumTanhAtZeroIsOnes) {
  ComputeGraph g;
  const auto x = g.parameter("x", 2, 3);
  const auto l = g.reduce_sum(g.tanh(x));
  Bindings b;
  b.bind("x", Tensor::matrix(2, 3));
  const auto grads = backward(g, forward(g, b), l);
  for (double v : grads.at("x").data()) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(Backward, NonScalarLossRejected) {
  ComputeGraph g;
  const auto x = g.parameter("x", 1, 2);
  const auto t = g.tanh(x);
  Bindings b;
  b.bind("x", Tensor::matrix(1, 2));
  EXPECT_THROW(backward(g, forward(g, b), t), GraphError);
}

TEST(Backward, TwoLayerNetSeventeenParams) {
  // W1 2x3, b1 1x3, W2 3x2, b2 1x2
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0, 0.7);
  ComputeGraph g;
  const auto x = g.constant(Tensor({4, 2}, std::vector<double>{0.3, -1.2, 0.8, 0.1, -0.5, 0.9, 1.5, -0.4}));
  const auto h = g.tanh(g.add(g.matmul(x, g.parameter("W1", 2, 3)), g.parameter("b1", 1, 3)));
  const auto y = g.add(g.matmul(h, g.parameter("W2", 3, 2)), g.parameter("b2", 1, 2));
  const auto l = g.squared_error(y, g.constant(Tensor({4, 2}, std::vector<double>{1, 0, 0, 1, 1, 1, 0, 0})));
  ParamStore ps;
  for (auto [name, r, c] : {std::tuple{"W1", 2, 3}, {"b1", 1, 3}, {"W2", 3, 2}, {"b2", 1, 2}}) {
    Tensor t = Tensor::matrix(r, c);
    for (auto& v : t.data()) v = n(rng);
    ps.add(name, t);
  }
  EXPECT_EQ(ps.parameter_count(), 17u);
  const auto report = testutil::finite_difference_check(g, ps, l, 1e-5);
  EXPECT_LE(report.max_rel_error, 1e-4) << report.worst;
}

TEST(Backward, RandomGraphsMatchFiniteDifferences) {
  const auto r = testutil::random_graph_gradient_suite(120, 2024);
  EXPECT_GE(r.graphs, 100u);
  EXPECT_LE(r.max_rel_error, 1e-4) << r.worst;
  for (const auto& op : testutil::differentiable_ops()) EXPECT_TRUE(r.ops_seen.count(op)) << "op never exercised: " << op;
}

TEST(Backward, StraightThroughPassesGradientUnchanged) {
  ComputeGraph g;
  const auto x = g.parameter("x", 1, 3);
  const auto w = g.constant(Tensor::row({1.0, 2.0, 3.0}));
  const auto st = g.straight_through(x);
  const auto l = g.reduce_sum(g.mul(st, w));
  Bindings b;
  b.bind("x", Tensor::row({0.2, 0.5, 0.3}));
  const auto v = forward(g, b);
  EXPECT_EQ(v[st], Tensor::row({0.0, 1.0, 0.0}));
  EXPECT_EQ(backward(g, v, l).at("x"), Tensor::row({1.0, 2.0, 3.0}));
}

TEST(Backward, WrtRestrictsAndZeroFillsUnreachable) {
  ComputeGraph g;
  const auto a = g.parameter("a", 1, 1);
  g.parameter("unused", 1, 1);
  const auto bnode = g.parameter("b", 1, 1);
  const auto l = g.mul(a, bnode);
  Bindings bind;
  bind.bind("a", Tensor::scalar(2));
  bind.bind("b", Tensor::scalar(5));
  bind.bind("unused", Tensor::scalar(1));
  const std::set<std::string> wrt{"a", "unused"};
  const auto grads = backward(g, forward(g, bind), l, &wrt);
  EXPECT_EQ(grads.size(), 2u);
  EXPECT_DOUBLE_EQ(grads.at("a").item(), 5.0);
  EXPECT_DOUBLE_EQ(grads.at("unused").item(), 0.0);
}

TEST(Adam, ZeroGradientsLeaveParametersUnchanged) {
  ParamStore ps;
  ps.add("w", Tensor::row({1.0, -2.0}));
  const auto before = ps.at("w");
  adam_step(ps, {{"w", Tensor::matrix(1, 2)}});
  EXPECT_EQ(ps.at("w"), before);
  EXPECT_EQ(ps.step(), 1u);
}

TEST(Adam, OneStepOnSquareMovesTowardZero) {
  ParamStore ps;
  ps.add("t", Tensor::scalar(1.0));
  adam_step(ps, {{"t", Tensor::scalar(2.0)}}, AdamConfig{0.1});
  EXPECT_LT(ps.at("t").item(), 1.0);
  EXPECT_GT(ps.at("t").item(), 0.0);
}

TEST(Adam, ConvergesOnShiftedSquare) {
  ParamStore ps;
  ps.add("t", Tensor::scalar(0.0));
  for (int i = 0; i < 100; ++i) {
    const double t = ps.at("t").item();
    adam_step(ps, {{"t", Tensor::scalar(2 * (t - 2))}}, AdamConfig{0.05});
  }
  EXPECT_LT(std::abs(ps.at("t").item() - 2.0), 0.1);
  EXPECT_EQ(ps.step(), 100u);
}

TEST(Adam, NameMismatchListsMissingAndExtra) {
  ParamStore ps;
  ps.add("a", Tensor::scalar(0));
  ps.add("b", Tensor::scalar(0));
  try {
    adam_step(ps, {{"a", Tensor::scalar(1)}, {"zzz", Tensor::scalar(1)}});
    FAIL();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("b"), std::string::npos);
    EXPECT_NE(msg.find("zzz"), std::string::npos);
  }
  EXPECT_EQ(ps.step(), 0u);
}

TEST(Adam, MomentsShapeMatchParameters) {
  std::mt19937_64 rng(1);
  ParamStore ps;
  ps.add_glorot("w", 3, 4, rng);
  adam_step(ps, {{"w", Tensor::matrix(3, 4, 0.5)}});
  const auto& e = ps.entry("w");
  EXPECT_EQ(e.m.shape(), e.value.shape());
  EXPECT_EQ(e.v.shape(), e.value.shape());
}

TEST(Clip, ScalesToMaxNorm) {
  Gradients g{{"a", Tensor::row({3.0, 0.0})}, {"b", Tensor::row({0.0, 4.0})}};
  EXPECT_DOUBLE_EQ(global_norm(g), 5.0);
  clip_global_norm(g, 2.5);
  EXPECT_NEAR(global_norm(g), 2.5, 1e-12);
  EXPECT_DOUBLE_EQ(g.at("a")(0, 0), 1.5);
  Gradients small{{"a", Tensor::row({0.1})}};
  clip_global_norm(small, 5.0);
  EXPECT_DOUBLE_EQ(small.at("a")(0, 0), 0.1);
}

TEST(Checkpoint, RoundTripIsBitwise) {
  testutil::TempDir dir;
  std::mt19937_64 rng(9);
  ParamStore ps;
  ps.add_glorot("layer.W", 5, 3, rng);
  ps.add("layer.b", Tensor::row({0.1, -1e-300, 3.141592653589793}));
  adam_step(ps, {{"layer.W", Tensor::matrix(5, 3, 0.25)}, {"layer.b", Tensor::row({1, 2, 3})}});
  save_checkpoint(dir.path() / "model.json", ps, {{"role", "test"}});
  const auto ck = load_checkpoint(dir.path() / "model.json");
  EXPECT_TRUE(ck.params == ps);
  EXPECT_EQ(ck.params.step(), 1u);
  EXPECT_EQ(ck.meta.at("role"), "test");

  std::ifstream js(dir.path() / "model.json");
  const auto manifest = nlohmann::json::parse(js);
  EXPECT_EQ(manifest.at("format"), "ckpt-v1");
  EXPECT_EQ(manifest.at("byte_length").get<std::size_t>(), 8u * 3u * (15u + 3u));
  EXPECT_EQ(std::filesystem::file_size(dir.path() / "model.bin"), manifest.at("byte_length").get<std::size_t>());
}

TEST(Checkpoint, TruncatedDataRejected) {
  testutil::TempDir dir;
  ParamStore ps;
  ps.add("w", Tensor::row({1, 2, 3}));
  save_checkpoint(dir.path() / "m.json", ps, {});
  std::filesystem::resize_file(dir.path() / "m.bin", 16);
  EXPECT_THROW(load_checkpoint(dir.path() / "m.json"), CheckpointError);
  EXPECT_THROW(load_checkpoint(dir.path() / "missing.json"), CheckpointError);
}

TEST(Checkpoint, LittleEndianLayout) {
  testutil::TempDir dir;
  ParamStore ps;
  ps.add("w", Tensor::scalar(1.0));
  save_checkpoint(dir.path() / "m.json", ps, {});
  std::ifstream bin(dir.path() / "m.bin", std::ios::binary);
  unsigned char bytes[8];
  bin.read(reinterpret_cast<char*>(bytes), 8);
  // 1.0 = 0x3FF0000000000000
  EXPECT_EQ(bytes[7], 0x3F);
  EXPECT_EQ(bytes[6], 0xF0);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(bytes[i], 0);
}
