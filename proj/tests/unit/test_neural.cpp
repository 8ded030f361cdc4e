#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "common/oracle_values.hpp"
#include "uavsim/error.hpp"
#include "uavsim/neural.hpp"

using namespace uavsim;

namespace {

Vector random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

}  // namespace

TEST(Mlp, ShapesAndParamCount) {
  const Mlp net({5, 7, 3}, 1);
  EXPECT_EQ(net.input_size(), 5);
  EXPECT_EQ(net.output_size(), 3);
  EXPECT_EQ(net.layer_count(), 2u);
  EXPECT_EQ(net.param_count(), 5u * 7 + 7 + 7 * 3 + 3);
  EXPECT_EQ(net.forward(Vector::Zero(5)).size(), 3);
  EXPECT_THROW(net.forward(Vector::Zero(4)), ContractViolation);
}

TEST(Mlp, InitialisationStaysInFanInBounds) {
  const Mlp net({16, 32, 4}, 9);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(net.weights()[l].cols()));
    EXPECT_LE(net.weights()[l].cwiseAbs().maxCoeff(), bound);
    EXPECT_LE(net.biases()[l].cwiseAbs().maxCoeff(), bound);
  }
  EXPECT_EQ(Mlp({16, 32, 4}, 9), net);
  EXPECT_FALSE(Mlp({16, 32, 4}, 10) == net);
}

TEST(Mlp, BatchForwardMatchesSingle) {
  const Mlp net({4, 8, 8, 2}, 3);
  std::mt19937_64 rng(1);
  Matrix x(4, 6);
  for (int c = 0; c < 6; ++c) x.col(c) = random_vector(4, rng);
  const Matrix y = net.forward_batch(x);
  for (int c = 0; c < 6; ++c) EXPECT_LT((y.col(c) - net.forward(x.col(c))).norm(), 1e-12);
}

TEST(Mlp, GradientsMatchFiniteDifferences) {
  const std::vector<std::vector<int>> archs{{3, 1}, {6, 10, 4}, {8, 16, 16, 5}, {149, 64, 64, 10}};
  std::mt19937_64 rng(2024);
  for (std::size_t i = 0; i < archs.size(); ++i) {
    const Mlp net(archs[i], 100 + i);
    const Vector x = random_vector(archs[i].front(), rng);
    const Vector up = random_vector(archs[i].back(), rng);
    EXPECT_LT(gradient_check(net, x, up, 100, rng), 1e-4) << "architecture " << i;
  }
}

TEST(Mlp, FlatParamsRoundTrip) {
  Mlp net({3, 5, 2}, 4);
  const Vector p = net.flat_params();
  EXPECT_EQ(static_cast<std::size_t>(p.size()), net.param_count());
  Mlp other({3, 5, 2}, 5);
  other.set_flat_params(p);
  EXPECT_EQ(other, net);
}

TEST(Mlp, JsonRoundTripIsBitExact) {
  const Mlp net({4, 9, 3}, 77);
  const Mlp back = mlp_from_json(nlohmann::json::parse(mlp_to_json(net).dump()));
  EXPECT_EQ(back, net);
}

TEST(MaskedSoftmax, MaskedEntriesAreExactlyZero) {
  Vector logits(4);
  logits << 1.0, 1000.0, -2.0, 3.0;
  const std::vector<char> mask{1, 0, 1, 1};
  const Vector p = masked_softmax(logits, mask);
  EXPECT_EQ(p(1), 0.0);
  EXPECT_NEAR(p.sum(), 1.0, 1e-15);
  EXPECT_GT(p(3), p(0));
  EXPECT_GT(p(0), p(2));
}

TEST(MaskedSoftmax, SurvivesHugeLogits) {
  Vector logits(3);
  logits << 1e300, 1e300 - 1e290, -1e300;
  const std::vector<char> mask{1, 1, 1};
  const Vector p = masked_softmax(logits, mask);
  for (int i = 0; i < 3; ++i) EXPECT_TRUE(std::isfinite(p(i)));
  EXPECT_NEAR(p.sum(), 1.0, 1e-12);
}

TEST(MaskedSoftmax, EmptyMaskIsAContractViolation) {
  const Vector logits = Vector::Zero(3);
  const std::vector<char> none{0, 0, 0};
  EXPECT_THROW(masked_softmax(logits, none), ContractViolation);
  const std::vector<char> wrong{1, 1};
  EXPECT_THROW(masked_softmax(logits, wrong), ContractViolation);
}

TEST(Entropy, MatchesOracle) {
  Vector p(2);
  p << 0.7, 0.3;
  EXPECT_NEAR(entropy(p), oracle::at("entropy_0.7_0.3"), 1e-15);
  EXPECT_NEAR(entropy(Vector::Constant(4, 0.25)), oracle::at("entropy_uniform4"), 1e-15);
  Vector one(3);
  one << 0.0, 1.0, 0.0;
  EXPECT_EQ(entropy(one), 0.0);
}

TEST(Adam, ZeroLearningRateLeavesParameters) {
  Mlp net({3, 4, 2}, 1);
  const Mlp before = net;
  Adam opt(net);
  MlpGrads g = net.zero_grads();
  for (auto& w : g.dW) w.setConstant(0.5);
  for (auto& b : g.db) b.setConstant(-0.5);
  opt.step(net, g, 0.0);
  EXPECT_EQ(net, before);
  EXPECT_EQ(opt.steps(), 1);
}

TEST(Adam, FirstStepMovesEachParameterByLr) {
  Mlp net({2, 2}, 1);
  const Vector before = net.flat_params();
  Adam opt(net);
  MlpGrads g = net.zero_grads();
  g.dW[0].setConstant(3.0);
  g.db[0].setConstant(-0.01);
  opt.step(net, g, 1e-2);
  const Vector delta = net.flat_params() - before;
  for (int i = 0; i < delta.size(); ++i) EXPECT_NEAR(std::abs(delta(i)), 1e-2, 1e-6);
}

TEST(Adam, NonFiniteGradientHalts) {
  Mlp net({2, 2}, 1);
  Adam opt(net);
  MlpGrads g = net.zero_grads();
  g.dW[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(opt.step(net, g, 1e-3), TrainingHalt);
}

TEST(Adam, JsonRoundTrip) {
  Mlp net({3, 3}, 2);
  Adam opt(net);
  MlpGrads g = net.zero_grads();
  g.dW[0].setConstant(0.1);
  opt.step(net, g, 1e-3);
  EXPECT_EQ(Adam::from_json(nlohmann::json::parse(opt.to_json().dump())), opt);
}

TEST(SoftUpdate, ContractsTowardOnline) {
  const Mlp online({4, 6, 2}, 1);
  Mlp target({4, 6, 2}, 2);
  const double tau = 0.1;
  double prev = (target.flat_params() - online.flat_params()).norm();
  for (int k = 0; k < 20; ++k) {
    soft_update(target, online, tau);
    const double now = (target.flat_params() - online.flat_params()).norm();
    EXPECT_NEAR(now, (1 - tau) * prev, 1e-12 * std::max(1.0, prev));
    prev = now;
  }
  soft_update(target, online, 1.0);
  EXPECT_EQ(target, online);
}

TEST(Rng, StateRoundTrips) {
  std::mt19937_64 a(123);
  a.discard(1000);
  std::mt19937_64 b = rng_from_string(rng_to_string(a));
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a(), b());
}
