#include <cmath>

#include <gtest/gtest.h>

#include "nndx/optimizers.hpp"

using namespace nndx;

namespace {

std::vector<LayerGroup> single(std::vector<Real> values) {
  std::vector<LayerGroup> groups(1);
  groups[0].name = "p";
  groups[0].tensor_names = {"p.weight"};
  const std::size_t n = values.size();
  groups[0].tensors.push_back(Tensor({n}, std::move(values)));
  return groups;
}

void set_grad(std::vector<LayerGroup>& groups, std::vector<Real> g) { groups[0].tensors[0].grad = std::move(g); }

}  // namespace

TEST(SgdMomentum, TwoStepsConstantGradient) {
  const Real alpha = 0.1, mu = 0.9, g = 0.5;
  auto groups = single({2.0});
  SgdMomentum opt(groups);
  opt.set_hyper(alpha, mu);
  set_grad(groups, {g});
  opt.step(groups);
  set_grad(groups, {g});
  opt.step(groups);
  EXPECT_NEAR(groups[0].tensors[0].values[0] - 2.0, -alpha * g * (2 + mu), 1e-15);
}

TEST(SgdMomentum, WeightDecayIsAddedToGradient) {
  auto groups = single({1.0});
  SgdMomentum opt(groups, 0.1);
  opt.set_hyper(0.5, 0.0);
  set_grad(groups, {0.0});
  opt.step(groups);
  EXPECT_DOUBLE_EQ(groups[0].tensors[0].values[0], 1.0 - 0.5 * 0.1);
}

TEST(SgdMomentum, FrozenGroupKeepsValuesAndVelocity) {
  auto groups = single({1.0, 2.0});
  SgdMomentum opt(groups, 5e-4);
  opt.set_hyper(0.1, 0.9);
  groups[0].frozen = true;
  set_grad(groups, {1.0, 1.0});
  opt.step(groups);
  EXPECT_EQ(groups[0].tensors[0].values, (std::vector<Real>{1.0, 2.0}));
  EXPECT_EQ(opt.velocity()[0][0], (std::vector<Real>{0.0, 0.0}));
}

TEST(SgdMomentum, LayoutMismatchIsDimensionError) {
  auto groups = single({1.0, 2.0});
  SgdMomentum opt(groups);
  set_grad(groups, {1.0});
  EXPECT_THROW(opt.step(groups), DimensionError);
}

TEST(Adam, FirstStepIsSignTimesLr) {
  auto groups = single({0.0, 0.0, 0.0});
  Adam opt(groups);
  opt.set_lr(0.01);
  set_grad(groups, {3.0, -0.2, 1e-3});
  opt.step(groups);
  const std::vector<Real> expected{-0.01, 0.01, -0.01};
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(groups[0].tensors[0].values[i], expected[i], 1e-6 * 0.01 + 1e-5 * 0.01) << i;
  }
  EXPECT_EQ(opt.steps(), 1u);
}

TEST(Adam, FrozenGroupUntouched) {
  auto groups = single({1.0});
  Adam opt(groups);
  opt.set_lr(0.1);
  groups[0].frozen = true;
  set_grad(groups, {1.0});
  opt.step(groups);
  EXPECT_EQ(groups[0].tensors[0].values[0], 1.0);
}
