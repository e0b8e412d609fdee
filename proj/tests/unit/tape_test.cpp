#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "nndx/tape.hpp"

using namespace nndx;
using nndx::testing::random_tensor;

TEST(Dense, MatchesHandMultiplication) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const Tensor w = random_tensor(rng, {2, 2});
    const Tensor x = random_tensor(rng, {2});
    const Tensor b = random_tensor(rng, {2});
    Tape tape;
    const auto y = tape.value(tape.dense(tape.input(x), tape.input(w), tape.input(b)));
    EXPECT_DOUBLE_EQ(y.values[0], w.values[0] * x.values[0] + w.values[1] * x.values[1] + b.values[0]);
    EXPECT_DOUBLE_EQ(y.values[1], w.values[2] * x.values[0] + w.values[3] * x.values[1] + b.values[1]);
  }
}

TEST(Dense, ShapeMismatchNamesBothShapes) {
  Tape tape;
  const Var x = tape.input(Tensor({3}));
  const Var w = tape.input(Tensor({2, 2}));
  const Var b = tape.input(Tensor({2}));
  try {
    tape.dense(x, w, b);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[2x2]"), std::string::npos) << msg;
  }
}

TEST(Conv2d, AllOnesKernelOnConstantInput) {
  const Real c = 1.75;
  Tape tape;
  const Var x = tape.input(Tensor({1, 5, 5}, c));
  const Var k = tape.input(Tensor({1, 1, 3, 3}, 1.0));
  const auto& y = tape.value(tape.conv2d(x, k, 1));
  ASSERT_EQ(y.shape, (Shape{1, 5, 5}));
  for (std::size_t i = 1; i < 4; ++i) {
    for (std::size_t j = 1; j < 4; ++j) EXPECT_DOUBLE_EQ(y.values[i * 5 + j], 9 * c);
  }
  EXPECT_DOUBLE_EQ(y.values[0], 4 * c);
  EXPECT_DOUBLE_EQ(y.values[2], 6 * c);
}

TEST(Conv2d, MatchesNaiveLoopReference) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor x = random_tensor(rng, {1, 4, 4});
    const Tensor k = random_tensor(rng, {2, 1, 3, 3});
    const std::size_t pad = trial % 2;
    Tape tape;
    const auto& y = tape.value(tape.conv2d(tape.input(x), tape.input(k), pad));
    const std::size_t oh = 4 + 2 * pad - 2;
    ASSERT_EQ(y.shape, (Shape{2, oh, oh}));
    for (std::size_t o = 0; o < 2; ++o) {
      for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < oh; ++j) {
          Real acc = 0;
          for (std::size_t c = 0; c < 1; ++c) {
            for (std::size_t a = 0; a < 3; ++a) {
              for (std::size_t b = 0; b < 3; ++b) {
                const long r = static_cast<long>(i + a) - static_cast<long>(pad);
                const long s = static_cast<long>(j + b) - static_cast<long>(pad);
                if (r < 0 || s < 0 || r >= 4 || s >= 4) continue;
                acc += k.values[((o * 1 + c) * 3 + a) * 3 + b] * x.values[(c * 4 + r) * 4 + s];
              }
            }
          }
          EXPECT_NEAR(y.values[(o * oh + i) * oh + j], acc, 1e-14);
        }
      }
    }
  }
}

TEST(Conv2d, RejectsEvenKernelsAndChannelMismatch) {
  Tape tape;
  const Var x = tape.input(Tensor({2, 4, 4}));
  EXPECT_THROW(tape.conv2d(x, tape.input(Tensor({1, 2, 2, 2})), 0), DimensionError);
  EXPECT_THROW(tape.conv2d(x, tape.input(Tensor({1, 3, 3, 3})), 1), DimensionError);
}

TEST(SoftmaxCrossEntropy, UniformLogitsGiveLogClasses) {
  Tape tape;
  const Var l = tape.softmax_cross_entropy(tape.input(Tensor({4}, 2.0)), 1);
  EXPECT_NEAR(tape.value(l).values[0], std::log(4.0), 1e-15);
}

TEST(SoftmaxCrossEntropy, StableForLargeLogits) {
  Tape tape;
  const Var l = tape.softmax_cross_entropy(tape.input(Tensor({2}, std::vector<Real>{1000, 0})), 1);
  EXPECT_NEAR(tape.value(l).values[0], 1000.0, 1e-9);
}

TEST(SoftmaxCrossEntropy, LabelOutOfRange) {
  Tape tape;
  EXPECT_THROW(tape.softmax_cross_entropy(tape.input(Tensor({3})), 3), IndexError);
}

TEST(Backward, NonScalarLossIsContractError) {
  Tape tape;
  const Var v = tape.input(Tensor({2}));
  EXPECT_THROW(tape.backward(v), ContractError);
}

TEST(Backward, ReplayAccumulatesIntoParameters) {
  Tensor w({2}, std::vector<Real>{1, 2});
  Tape tape;
  const Var loss = tape.sum(tape.mul(tape.parameter(w), tape.input(Tensor({2}, std::vector<Real>{3, 4}))));
  tape.backward(loss);
  EXPECT_EQ(w.grad, (std::vector<Real>{3, 4}));
  tape.backward(loss);
  EXPECT_EQ(w.grad, (std::vector<Real>{6, 8}));
}

TEST(Backward, ParameterViewGetsNoGradient) {
  Tensor w({2}, 1.0);
  Tape tape;
  tape.backward(tape.sum(tape.parameter_view(w)));
  EXPECT_FALSE(w.has_grad());
}

TEST(FiniteDifference, EveryOpOnRandomInstances) {
  const auto worst = nndx::testing::gradcheck_all_ops(100, 2024);
  ASSERT_FALSE(worst.empty());
  for (const auto& [op, err] : worst) EXPECT_LT(err, 1e-4) << op;
}
