#include <cmath>

#include <gtest/gtest.h>

#include "nndx/tensor.hpp"

using namespace nndx;

TEST(Tensor, ShapeAndFill) {
  Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rank(), 2u);
  EXPECT_FALSE(t.has_grad());
  for (Real v : t.values) EXPECT_EQ(v, 1.5);
  EXPECT_EQ(shape_string(t.shape), "[2x3]");
}

TEST(Tensor, RejectsZeroDimensionAndSizeMismatch) {
  EXPECT_THROW(Tensor({2, 0}), DimensionError);
  EXPECT_THROW(Tensor({2, 2}, std::vector<Real>{1, 2, 3}), DimensionError);
}

TEST(Tensor, GradAccumulates) {
  Tensor t({3});
  const std::vector<Real> d{1, 2, 3};
  t.accumulate_grad(d);
  t.accumulate_grad(d);
  EXPECT_EQ(t.grad, (std::vector<Real>{2, 4, 6}));
  t.zero_grad();
  EXPECT_EQ(t.grad, (std::vector<Real>{0, 0, 0}));
  EXPECT_THROW(t.accumulate_grad(std::vector<Real>{1}), DimensionError);
}

TEST(Tensor, AllFinite) {
  Tensor t({2}, 0.0);
  EXPECT_TRUE(t.all_finite());
  t.values[1] = std::nan("");
  EXPECT_FALSE(t.all_finite());
}

TEST(GroupGradNorm, MatchesConcatenatedNorm) {
  const std::vector<Real> a{3, 0};
  const std::vector<Real> b{4};
  const std::vector<std::span<const Real>> parts{a, b};
  EXPECT_DOUBLE_EQ(group_grad_norm(parts), 5.0);

  const std::vector<Real> w{0.5, -1.25};
  const std::vector<Real> bias{2.0};
  std::vector<Real> flat{0.5, -1.25, 2.0};
  Real sq = 0;
  for (Real v : flat) sq += v * v;
  const std::vector<std::span<const Real>> two{w, bias};
  EXPECT_DOUBLE_EQ(group_grad_norm(two), std::sqrt(sq));
}

TEST(GroupGradNorm, EmptyGroupIsContractError) {
  EXPECT_THROW(group_grad_norm({}), ContractError);
}
