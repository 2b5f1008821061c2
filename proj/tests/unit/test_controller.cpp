#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "controller.hpp"
#include "errors.hpp"

using namespace tamperid;

namespace {
Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}
const NoiseModel kNoise = NoiseModel::gaussian(0, 1);
}  // namespace

TEST(ReferenceSignal, Values) {
  const auto r = ReferenceSignal::sinusoid(4, 18000);
  EXPECT_NEAR(r.at(0), 0.0, 1e-15);
  EXPECT_NEAR(r.at(4500), 4.0, 1e-12);
  EXPECT_NEAR(r.at(9000), 0.0, 1e-12);
  EXPECT_NEAR(r.at(13500), -4.0, 1e-12);
  EXPECT_EQ(ReferenceSignal::constant(2.5).at(77), 2.5);
  EXPECT_THROW(ReferenceSignal::sinusoid(4, 0), ConfigError);
  EXPECT_THROW(ReferenceSignal::constant(NAN), ConfigError);
}

TEST(Controller, ScalarPlant) {
  Controller c(1, {}, 50, 1e-3);
  const auto a = c.control(vec({2}), kNoise, 6);
  EXPECT_DOUBLE_EQ(a.u, 3.0);
  EXPECT_EQ(a.phi, vec({3}));
  EXPECT_FALSE(a.guarded);
}

TEST(Controller, TwoTapPlant) {
  Controller c(2, {2.0}, 50, 1e-3);
  const auto a = c.control(vec({3, -1}), kNoise, 4);
  EXPECT_DOUBLE_EQ(a.u, 2.0);
  EXPECT_EQ(a.phi, vec({2, 2}));
  EXPECT_EQ(c.history().front(), 2.0);
  const auto b = c.control(vec({1, 1}), kNoise, 0);
  EXPECT_DOUBLE_EQ(b.u, -2.0);
  EXPECT_EQ(b.phi, vec({-2, 2}));
}

TEST(Controller, NoiseMeanIsCompensated) {
  Controller c(1, {}, 50, 1e-3);
  EXPECT_DOUBLE_EQ(c.control(vec({2}), NoiseModel::gaussian(1, 1), 6).u, 2.5);
}

TEST(Controller, GuardAndClamp) {
  Controller c(1, {}, 50, 1e-3);
  const auto a = c.control(vec({1e-9}), kNoise, 0.01);
  EXPECT_DOUBLE_EQ(a.u, 10.0);  // 0.01 / 1e-3
  EXPECT_TRUE(a.guarded);
  const auto b = c.control(vec({-1e-9}), kNoise, 1.0);
  EXPECT_DOUBLE_EQ(b.u, -50.0);
  EXPECT_TRUE(b.guarded);
  const auto d = c.control(vec({0.1}), kNoise, 100.0);
  EXPECT_DOUBLE_EQ(d.u, 50.0);
  EXPECT_EQ(c.guarded_steps(), 3);
}

TEST(Controller, Validation) {
  EXPECT_THROW(Controller(2, {}, 50, 1e-3), DimensionError);
  EXPECT_THROW(Controller(1, {}, 0, 1e-3), ConfigError);
  EXPECT_THROW(Controller(1, {}, 50, 0), ConfigError);
  Controller c(2, {0.0}, 50, 1e-3);
  EXPECT_THROW(c.control(vec({1}), kNoise, 0), DimensionError);
}

// Away from the guards the law satisfies theta_hat' phi + E[w] = y*.
TEST(Controller, CertaintyEquivalenceIdentity) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2), lead(0.5, 3);
  Controller c(3, {0.3, -0.7}, 1e6, 1e-3);
  const auto noise = NoiseModel::gaussian(0.4, 1);
  for (int i = 0; i < 1000; ++i) {
    const Vector th = vec({lead(rng), u(rng), u(rng)});
    const double ys = u(rng);
    const auto a = c.control(th, noise, ys);
    ASSERT_FALSE(a.guarded);
    ASSERT_NEAR(th.dot(a.phi) + noise.mean(), ys, 1e-9);
  }
}

TEST(Controller, RegressorBoundedByClamp) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 5);
  Controller c(2, {0.0}, 50, 1e-3);
  for (int i = 0; i < 1000; ++i) {
    const auto a = c.control(vec({n(rng) * 1e-3, n(rng)}), kNoise, n(rng));
    ASSERT_LE(a.phi.norm(), std::sqrt(2.0) * 50 + 1e-12);
  }
}

// With the true parameters and no noise the plant output equals y* exactly.
TEST(Controller, NoiselessExactTracking) {
  const Vector theta = vec({3, -1});
  const auto ref = ReferenceSignal::sinusoid(4, 18000);
  Controller c(2, {0.5}, 50, 1e-3);
  std::vector<double> ys, stars;
  for (std::int64_t k = 0; k < 2000; ++k) {
    const double target = ref.at(k + 1);
    const auto a = c.control(theta, kNoise, target);
    ys.push_back(theta.dot(a.phi));
    stars.push_back(target);
  }
  EXPECT_LT(tracking_cost(ys, stars), 1e-24);
}

TEST(TrackingCost, Values) {
  const std::vector<double> y{1, 2, 3}, s{1, 2, 3}, t{0, 0, 0};
  EXPECT_EQ(tracking_cost(y, s), 0.0);
  EXPECT_DOUBLE_EQ(tracking_cost(y, t), 14.0 / 3.0);
  const std::vector<double> one{2};
  EXPECT_THROW(tracking_cost(one, s), DimensionError);
  EXPECT_THROW(tracking_cost(std::vector<double>{}, std::vector<double>{}), DimensionError);
}
