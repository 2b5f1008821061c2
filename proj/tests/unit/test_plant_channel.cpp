#include <gtest/gtest.h>

#include "errors.hpp"
#include "oracles.hpp"
#include "plant.hpp"

using namespace tamperid;

namespace {
Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}
}  // namespace

TEST(FirPlant, NoiselessOutputs) {
  FirPlant plant(vec({3, -1}), NoiseModel::gaussian(0, 1), 1);
  EXPECT_EQ(plant.output(vec({1, 1}), 0.0), 2.0);
  EXPECT_EQ(plant.output(vec({1, 2}), 0.0), 1.0);
  FirPlant zero(vec({0, 0}), NoiseModel::gaussian(0, 1), 1);
  EXPECT_EQ(zero.output(vec({5, -3}), 0.7), 0.7);
}

TEST(FirPlant, DimensionMismatch) {
  FirPlant plant(vec({3, -1}), NoiseModel::gaussian(0, 1), 1);
  EXPECT_THROW(plant.output(vec({1, 2, 3}), 0.0), DimensionError);
  EXPECT_THROW(plant.step(vec({1})), DimensionError);
}

TEST(FirPlant, StepUsesItsNoiseDraw) {
  FirPlant plant(vec({3, -1}), NoiseModel::gaussian(0.5, 4), 9);
  const double y = plant.step(vec({1, 2}));
  EXPECT_DOUBLE_EQ(y, 1.0 + plant.last_noise());
}

TEST(FirPlant, ReseedingReproducesTrajectory) {
  FirPlant a(vec({3, -1}), NoiseModel::gaussian(0, 1), 42), b(vec({3, -1}), NoiseModel::gaussian(0, 1), 42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.step(vec({0.3, -0.2})), b.step(vec({0.3, -0.2})));
  TamperChannel c1({0.2, 0.3}, 5), c2({0.2, 0.3}, 5);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(c1.transmit(to_bit(i % 3 == 0)), c2.transmit(to_bit(i % 3 == 0)));
}

TEST(BinarySensor, Threshold) {
  BinarySensor s(1.0);
  EXPECT_EQ(s.sense(1.0), Bit::one);
  EXPECT_EQ(s.sense(1.0001), Bit::zero);
  EXPECT_EQ(s.sense(-3.0), Bit::one);
  EXPECT_THROW(BinarySensor(std::numeric_limits<double>::infinity()), ConfigError);
}

TEST(TamperChannel, IdentityChannel) {
  TamperChannel c({0, 0}, 3);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_EQ(c.transmit(Bit::one), Bit::one);
    EXPECT_EQ(c.transmit(Bit::zero), Bit::zero);
  }
}

TEST(TamperChannel, FlipFrequencies) {
  const int n = 100000;
  {
    const double p = 1.0 - 1e-6;
    TamperChannel c({p, 0.0}, 17);
    int zeros = 0;
    for (int i = 0; i < n; ++i) zeros += c.transmit(Bit::one) == Bit::zero;
    EXPECT_NEAR(zeros / double(n), p, std::max(oracle::three_sigma(p, n), 3.0 / n));
  }
  {
    TamperChannel c({0.2, 0.3}, 18);
    int ones = 0, zeros = 0;
    for (int i = 0; i < n; ++i) ones += c.transmit(Bit::zero) == Bit::one;
    for (int i = 0; i < n; ++i) zeros += c.transmit(Bit::one) == Bit::zero;
    EXPECT_NEAR(ones / double(n), 0.3, oracle::three_sigma(0.3, n));
    EXPECT_NEAR(zeros / double(n), 0.2, oracle::three_sigma(0.2, n));
  }
}

TEST(FlipProbabilities, Validation) {
  auto key_of = [](FlipProbabilities f) {
    try {
      f.validate();
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string("ok");
  };
  EXPECT_EQ(key_of({0.5, 0.5}), "channel.p+channel.q");
  EXPECT_EQ(key_of({0.4, 0.6 + 1e-10}), "channel.p+channel.q");
  EXPECT_EQ(key_of({0.4, 0.6 + 1e-8}), "ok");
  EXPECT_EQ(key_of({1.0, 0.2}), "channel.p");
  EXPECT_EQ(key_of({-0.1, 0.2}), "channel.p");
  EXPECT_EQ(key_of({0.1, 1.0}), "channel.q");
  EXPECT_EQ(key_of({0.8, 0.9}), "ok");
  EXPECT_THROW(TamperChannel({0.5, 0.5}, 1), ConfigError);
}

TEST(TamperedZeroProb, ClosedForm) {
  const auto n = NoiseModel::gaussian(0, 1);
  EXPECT_DOUBLE_EQ(tampered_zero_prob({0, 0}, n, 0.0), 0.5);
  const double expected = (0.5 - 1.0) * oracle::normal_cdf(-1.0) + 0.7;
  EXPECT_NEAR(tampered_zero_prob({0.2, 0.3}, n, -1.0), expected, 1e-15);
  EXPECT_NEAR(tampered_zero_prob({0.2, 0.3}, n, -1.0), 0.62067238, 1e-8);
  // Degenerate channel: the probability no longer depends on the margin, which
  // is why construction rejects it.
  EXPECT_DOUBLE_EQ(tampered_zero_prob({0.5, 0.5}, n, -3.0), 0.5);
  EXPECT_DOUBLE_EQ(tampered_zero_prob({0.5, 0.5}, n, 2.0), 0.5);
}

TEST(TamperedZeroProb, MatchesSimulation) {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(-2, 2), pr(0.0, 0.95);
  const int n = 100000;
  for (int cfg = 0; cfg < 5; ++cfg) {
    Vector theta = vec({u(rng), u(rng)});
    Vector phi = vec({u(rng), u(rng)});
    FlipProbabilities f{pr(rng), pr(rng)};
    if (std::abs(f.contrast()) < 0.05) f.q = 0.5 * f.q;
    const auto noise = NoiseModel::gaussian(0, 1);
    FirPlant plant(theta, noise, 1000 + cfg);
    BinarySensor sensor(1.0);
    TamperChannel ch(f, 2000 + cfg);
    int zeros = 0;
    for (int i = 0; i < n; ++i) zeros += ch.transmit(sensor.sense(plant.step(phi))) == Bit::zero;
    const double prob = tampered_zero_prob(f, noise, 1.0 - theta.dot(phi));
    EXPECT_NEAR(zeros / double(n), prob, oracle::three_sigma(prob, n));
  }
}

TEST(RegressorSource, FirWindowShiftsInputs) {
  InputLaw law;
  law.variance = 2.0;
  auto src = RegressorSource::fir_window(3, law, 100.0, 7);
  Vector prev = src.next(1);
  for (int k = 2; k < 50; ++k) {
    Vector cur = src.next(k);
    EXPECT_EQ(cur(1), prev(0));
    EXPECT_EQ(cur(2), prev(1));
    prev = cur;
  }
}

TEST(RegressorSource, InputLawMoments) {
  for (auto kind : {InputLaw::Kind::gaussian, InputLaw::Kind::uniform}) {
    InputLaw law;
    law.kind = kind;
    law.variance = 2.0;
    auto src = RegressorSource::fir_window(1, law, 1e9, 99);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int k = 1; k <= n; ++k) {
      const double x = src.next(k)(0);
      s += x;
      s2 += x * x;
    }
    EXPECT_NEAR(s / n, 0.0, 4 * std::sqrt(2.0 / n));
    EXPECT_NEAR(s2 / n, 2.0, 0.03);
    if (kind == InputLaw::Kind::uniform) {
      auto again = RegressorSource::fir_window(1, law, 1e9, 5);
      for (int k = 1; k < 1000; ++k) EXPECT_LE(std::abs(again.next(k)(0)), std::sqrt(6.0));
    }
  }
}

TEST(RegressorSource, DecayingStandardDeviation) {
  InputLaw law;
  law.variance = 1.0;
  law.variance_decay = 0.125;
  EXPECT_DOUBLE_EQ(law.stddev_at(1), 1.0);
  EXPECT_NEAR(law.stddev_at(256), std::pow(256.0, -0.125), 1e-15);
  EXPECT_NEAR(law.stddev_at(256), 0.5, 1e-15);
}

TEST(RegressorSource, BoundViolationsAreCountedNotFatal) {
  auto src = RegressorSource::external([](std::int64_t k) { return vec({double(k), 0.0}); }, 2.5);
  for (int k = 1; k <= 5; ++k) src.next(k);
  EXPECT_EQ(src.bound_violations(), 3);
  src.observe(vec({10, 10}));
  EXPECT_EQ(src.bound_violations(), 4);
}
