#include <gtest/gtest.h>

#include <cmath>

#include "srd/nn/layers.hpp"
#include "srd/nn/params_io.hpp"
#include "support/grad_oracle.hpp"

using namespace srd;
using nn::Tensor;

namespace {

void expect_values(const Tensor& t, const std::vector<double>& want, double tol = 1e-12) {
  ASSERT_EQ(t.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(t[i], want[i], tol) << "index " << i;
}

}  // namespace

TEST(Conv1d, FoodHereDetectorZeroResidual) {
  auto out = nn::conv1d(Tensor::vector({0.5, 0, 0}), Tensor::vector({1, 0, 0}), Tensor::scalar(-0.5));
  expect_values(out, {0.0});
}

TEST(Conv1d, ZeroInputLeavesBias) {
  auto out = nn::conv1d(Tensor::vector({0, 0, 0}), Tensor::vector({0, 1, 1}), Tensor::scalar(-0.5));
  expect_values(out, {-0.5});
}

TEST(Conv1d, DilatedOutputLength) {
  std::vector<double> in(40, 1.0);
  auto out = nn::conv1d(Tensor::vector(in), Tensor::vector(std::vector<double>(8, 1.0)), std::nullopt, 5);
  EXPECT_EQ(out.size(), 40u - 7u * 5u);
  // Each position sums 8 ones.
  for (double v : out.values()) EXPECT_DOUBLE_EQ(v, 8.0);
}

TEST(Conv1d, DilatedPicksStridedInputs) {
  std::vector<double> in(10);
  for (int i = 0; i < 10; ++i) in[i] = i;
  auto out = nn::conv1d(Tensor::vector(in), Tensor::vector({1, -1}), Tensor::scalar(0.5), 3);
  // out[i] = in[i] - in[i+3] + 0.5
  expect_values(out, {-2.5, -2.5, -2.5, -2.5, -2.5, -2.5, -2.5});
}

TEST(Conv1d, ShapeErrorNamesBothShapes) {
  try {
    nn::conv1d(Tensor::vector({1, 2}), Tensor::vector({1, 1, 1}), std::nullopt);
    FAIL() << "expected DimensionError";
  } catch (const nn::DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[3]"), std::string::npos) << msg;
  }
}

TEST(FullyConnected, IdentityAndBiasOnly) {
  auto x = Tensor::vector({0.3, -1.2});
  expect_values(nn::fully_connected(x, Tensor::from({1, 0, 0, 1}, {2, 2}), Tensor::vector({0, 0})),
                {0.3, -1.2});
  expect_values(nn::fully_connected(x, Tensor::zeros({2, 2}), Tensor::vector({1, 2})), {1, 2});
}

TEST(FullyConnected, DotProductByHand) {
  auto out = nn::fully_connected(Tensor::vector({1, 0, 0.5}), Tensor::from({1, 0, -1}, {1, 3}),
                                 Tensor::vector({0}));
  expect_values(out, {0.5});
}

TEST(FullyConnected, MismatchThrows) {
  EXPECT_THROW(nn::fully_connected(Tensor::vector({1, 2}), Tensor::zeros({2, 3}), Tensor::zeros({2})),
               nn::DimensionError);
}

TEST(Deconv3x3, ZeroKernelGivesZeroGrid) {
  auto g = Tensor::from({1, 2, 3, 4, 5, 6}, {2, 3});
  expect_values(nn::deconv3x3(g, Tensor::zeros({3, 3})), std::vector<double>(6, 0.0));
}

TEST(Deconv3x3, IdentityKernelIsIdentity) {
  Rng rng(3);
  std::vector<double> v(20);
  for (auto& x : v) x = rng.normal();
  auto g = Tensor::from(v, {4, 5});
  auto id = Tensor::from({0, 0, 0, 0, 1, 0, 0, 0, 0}, {3, 3});
  expect_values(nn::deconv3x3(g, id), v);
}

TEST(Deconv3x3, CenterOneSidesTenthSpreadsToNeighbourhood) {
  std::vector<double> v(9, 0.0);
  v[4] = 1.0;
  auto k = Tensor::from({0.1, 0.1, 0.1, 0.1, 1, 0.1, 0.1, 0.1, 0.1}, {3, 3});
  expect_values(nn::deconv3x3(Tensor::from(v, {3, 3}), k), {0.1, 0.1, 0.1, 0.1, 1, 0.1, 0.1, 0.1, 0.1});
}

TEST(Deconv3x3, TransposedOrientation) {
  // A hot cell at (0,0) spreads k[a][b] to out[a-1][b-1]; only the lower
  // right quadrant of the kernel lands inside the grid.
  std::vector<double> v(9, 0.0);
  v[0] = 1.0;
  auto k = Tensor::from({1, 2, 3, 4, 5, 6, 7, 8, 9}, {3, 3});
  auto out = nn::deconv3x3(Tensor::from(v, {3, 3}), k);
  expect_values(out, {5, 6, 0, 8, 9, 0, 0, 0, 0});
}

TEST(SelectiveActivation, Values) {
  EXPECT_DOUBLE_EQ(nn::selective_activation(Tensor::scalar(0.0)).item(), 1.0);
  EXPECT_NEAR(nn::selective_activation(Tensor::scalar(std::sqrt(0.01))).item(), 0.5, 1e-15);
  EXPECT_NEAR(nn::selective_activation(Tensor::vector({-0.5})).item(), 0.01 / 0.26, 1e-15);
  EXPECT_THROW(nn::selective_activation(Tensor::scalar(1.0), 0.0), nn::UsageError);
}

TEST(SelectiveActivation, StrictlyDecreasingInNorm) {
  double prev = 2.0;
  for (int i = 0; i <= 50; ++i) {
    const double r = i * 0.05;
    const double v = nn::selective_activation(Tensor::vector({r * 0.6, r * 0.8})).item();
    EXPECT_GT(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_LT(v, prev);
    if (i > 0) EXPECT_LT(v, 1.0);
    prev = v;
  }
}

TEST(ThresholdActivation, Values) {
  EXPECT_DOUBLE_EQ(nn::threshold_activation(Tensor::scalar(0.0)).item(), 0.0);
  EXPECT_NEAR(nn::threshold_activation(Tensor::scalar(1.0)).item(), std::tanh(1.0), 1e-15);
  EXPECT_NEAR(nn::threshold_activation(Tensor::scalar(-1.0)).item(), std::tanh(-0.01), 1e-15);
  EXPECT_NEAR(nn::threshold_activation(Tensor::scalar(1.0)).item(), 0.7616, 1e-4);
}

TEST(Softmax, Values) {
  expect_values(nn::softmax(Tensor::vector({0, 0})), {0.5, 0.5});
  auto big = nn::softmax(Tensor::vector({1000, 0}));
  EXPECT_NEAR(big[0], 1.0, 1e-12);
  EXPECT_TRUE(std::isfinite(big[1]));
  auto s = nn::softmax(Tensor::vector({1, 2, 3}));
  expect_values(s, {0.0900, 0.2447, 0.6652}, 1e-4);
}

TEST(Softmax, SumsToOneAndShiftInvariant) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(1 + rng.index(8));
    for (auto& x : v) x = rng.normal(0, 5);
    const double c = rng.normal(0, 50);
    std::vector<double> w = v;
    for (auto& x : w) x += c;
    auto a = nn::softmax(Tensor::vector(v));
    auto b = nn::softmax(Tensor::vector(w));
    double total = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      EXPECT_GT(a[i], 0.0);
      EXPECT_NEAR(a[i], b[i], 1e-9);
      total += a[i];
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(CrossEntropySelf, Values) {
  EXPECT_NEAR(nn::cross_entropy_self(Tensor::vector({5, 0})).item(), std::log1p(std::exp(-5.0)), 1e-15);
  EXPECT_NEAR(nn::cross_entropy_self(Tensor::vector({5, 0})).item(), 0.00672, 1e-5);
  EXPECT_NEAR(nn::cross_entropy_self(Tensor::vector({2, 2})).item(), std::log(2.0), 1e-15);
  EXPECT_NEAR(nn::cross_entropy_self(Tensor::vector({0, 10})).item(), 4.54e-5, 1e-7);
}

TEST(CrossEntropySelf, TieGoesToLowestIndex) {
  auto z = Tensor::vector({3, 3}, true);
  nn::backward(nn::cross_entropy_self(z));
  // Label 0: gradient is p - onehot(0) = (-0.5, 0.5).
  expect_values(Tensor::vector(z.grad()), {-0.5, 0.5}, 1e-15);
}

TEST(CrossEntropySelf, NonNegativeAndVanishesWhenDominant) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    auto z = Tensor::vector({rng.normal(0, 3), rng.normal(0, 3), rng.normal(0, 3)});
    EXPECT_GE(nn::cross_entropy_self(z).item(), 0.0);
  }
  double prev = 1.0;
  for (double gap : {1.0, 5.0, 10.0, 20.0, 40.0}) {
    const double l = nn::cross_entropy_self(Tensor::vector({gap, 0.0})).item();
    EXPECT_LT(l, prev);
    prev = l;
  }
  EXPECT_LT(prev, 1e-15);
}

TEST(Argmax, LowestIndexOnTies) {
  const std::vector<double> v{1, 3, 3, 2};
  EXPECT_EQ(nn::argmax(v), 1u);
}

TEST(Backward, SquareAtThree) {
  auto x = Tensor::scalar(3.0, true);
  nn::backward(nn::square(x));
  EXPECT_DOUBLE_EQ(x.grad()[0], 6.0);
}

TEST(Backward, AccumulatesUntilCleared) {
  auto x = Tensor::scalar(3.0, true);
  nn::backward(nn::square(x));
  nn::backward(nn::square(x));
  EXPECT_DOUBLE_EQ(x.grad()[0], 12.0);
  x.zero_grad();
  nn::backward(nn::square(x));
  EXPECT_DOUBLE_EQ(x.grad()[0], 6.0);
}

TEST(Backward, LossGradWithRespectToItselfIsOne) {
  auto x = Tensor::vector({1.0, 2.0}, true);
  auto loss = nn::sum(nn::square(x));
  nn::backward(loss);
  EXPECT_DOUBLE_EQ(loss.grad()[0], 1.0);
  EXPECT_EQ(loss.grad().size(), loss.values().size());
}

TEST(Backward, NonScalarIsUsageError) {
  auto x = Tensor::vector({1.0, 2.0}, true);
  EXPECT_THROW(nn::backward(nn::square(x)), nn::UsageError);
}

TEST(Backward, TwoLayerNetMatchesFiniteDifferences) {
  auto x = Tensor::vector({0.4, -0.3, 0.9});
  auto W1 = Tensor::from({0.2, -0.5, 0.1, 0.7, 0.3, -0.2}, {2, 3}, true);
  auto b1 = Tensor::vector({0.05, -0.1}, true);
  auto W2 = Tensor::from({0.6, -0.4, 0.2, 0.9}, {2, 2}, true);
  auto b2 = Tensor::vector({0.0, 0.1}, true);
  std::vector<Tensor> params{W1, b1, W2, b2};
  auto loss = [&] {
    return nn::cross_entropy_self(
        nn::fully_connected(nn::threshold_activation(nn::fully_connected(x, W1, b1)), W2, b2));
  };
  const auto res = oracle::check_gradients(params, loss);
  EXPECT_LE(res.worst_rel_error, 1e-4);
  EXPECT_EQ(res.checked, 14u);
}

TEST(Backward, NoGradNormalizerGetsNoGradient) {
  auto x = Tensor::vector({1.0, -3.0, 2.0}, true);
  auto y = nn::normalize_max_abs(x);
  nn::backward(nn::sum(y));
  // d/dx (x / c) with c frozen at 3.
  expect_values(Tensor::vector(x.grad()), {1.0 / 3, 1.0 / 3, 1.0 / 3}, 1e-15);
}

TEST(ComputationRecord, TopologicalAndNoGradRegionsEmpty) {
  auto x = Tensor::vector({1.0, 2.0}, true);
  auto y = nn::tanh(nn::scale(x, 2.0));
  auto loss = nn::sum(nn::mul(y, y));
  nn::ComputationRecord rec(loss);
  const auto& order = rec.order();
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (const auto& p : order[i]->parents) {
      auto it = std::find(order.begin(), order.end(), p);
      ASSERT_NE(it, order.end());
      EXPECT_LT(static_cast<std::size_t>(it - order.begin()), i);
    }
  }
  EXPECT_EQ(rec.operation_count(), 4u);

  Tensor frozen;
  {
    nn::NoGradGuard guard;
    frozen = nn::sum(nn::square(x));
  }
  EXPECT_FALSE(frozen.requires_grad());
  EXPECT_EQ(nn::ComputationRecord(frozen).operation_count(), 0u);
}

TEST(Sgd, StepRule) {
  auto p = Tensor::scalar(1.0, true);
  p.mutable_grad()[0] = 2.0;
  std::vector<Tensor> ps{p};
  nn::sgd_step(ps, nn::SgdSettings(0.1));
  EXPECT_DOUBLE_EQ(p.item(), 0.8);
  EXPECT_DOUBLE_EQ(p.grad()[0], 0.0);
  nn::sgd_step(ps, nn::SgdSettings(0.1));
  EXPECT_DOUBLE_EQ(p.item(), 0.8);
  EXPECT_THROW(nn::SgdSettings(0.0), nn::UsageError);
  EXPECT_THROW(nn::SgdSettings(-1e-4), nn::UsageError);
}

TEST(Sgd, DecreasesConvexQuadratic) {
  auto theta = Tensor::vector({1.5, -2.0, 0.3}, true);
  std::vector<Tensor> ps{theta};
  double prev = 1e9;
  for (int i = 0; i < 20; ++i) {
    auto loss = nn::sum(nn::square(theta));
    EXPECT_LT(loss.item(), prev);
    prev = loss.item();
    nn::backward(loss);
    nn::sgd_step(ps, nn::SgdSettings(0.1));
  }
}

TEST(StablePose, Values) {
  auto p = Tensor::scalar(0.7);
  EXPECT_DOUBLE_EQ(nn::stable_pose_activation(Tensor::scalar(0.7), p).item(), 1.0);
  // sigma_sa((x-p)^2) = 0.5 when (x-p)^4 = eps.
  const double d = std::pow(0.01, 0.25);
  EXPECT_NEAR(nn::stable_pose_activation(Tensor::scalar(0.7 + d), p).item(), 0.5, 1e-12);
  EXPECT_NEAR(nn::inverse_stable_pose_activation(Tensor::scalar(0.7 + d), p).item(), 0.5, 1e-12);
  double prev = 1.0;
  for (double off : {0.1, 0.5, 1.0, 3.0, 10.0}) {
    const double v = nn::stable_pose_activation(Tensor::scalar(0.7 + off), p).item();
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_LT(prev, 1e-5);
}

TEST(GradOracle, RandomNetworksMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto net = oracle::make_random_net(seed);
    const auto res = oracle::check_gradients(net.params, net.loss);
    EXPECT_LE(res.worst_rel_error, 1e-4) << "seed " << seed;
    EXPECT_LE(res.parameters, 200u);
  }
}

TEST(ParamsIo, RoundTripIsBitExact) {
  Rng rng(9);
  nn::ParamSet ps;
  std::vector<double> v(180);
  for (auto& x : v) x = rng.normal() * 1e-3 + 1.0 / 3.0;
  ps.emplace("kernels", Tensor::from(v, {20, 3, 3}, true));
  ps.emplace("bias", Tensor::scalar(-0.1, true));
  const auto back = nn::params_from_json(nn::params_to_json(ps));
  ASSERT_EQ(back.size(), ps.size());
  for (const auto& [name, t] : ps) {
    EXPECT_EQ(back.at(name).shape(), t.shape());
    EXPECT_EQ(back.at(name).values(), t.values()) << name;
  }
}

TEST(ParamsIo, TruncatedFileIsParseErrorWithOffset) {
  nn::ParamSet ps{{"w", Tensor::vector({1, 2, 3})}};
  auto text = nn::params_to_json(ps);
  text.resize(text.size() / 2);
  try {
    nn::params_from_json(text);
    FAIL();
  } catch (const nn::ParamsFormatError& e) {
    EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos);
  }
}

TEST(ParamsIo, UnknownVersionIsVersionError) {
  nn::ParamSet ps{{"w", Tensor::vector({1})}};
  auto text = nn::params_to_json(ps);
  const auto pos = text.find("\"version\": 1");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 12, "\"version\": 7");
  EXPECT_THROW(nn::params_from_json(text), nn::ParamsVersionError);
}
