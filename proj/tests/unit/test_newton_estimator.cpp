#include <gtest/gtest.h>

#include <random>

#include "errors.hpp"
#include "newton_estimator.hpp"
#include "oracles.hpp"

using namespace tamperid;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

const ConstraintSet kBox = ConstraintSet::box(vec({-6, -6}), vec({6, 6}));

NewtonSettings settings(Vector theta0, double radius, double c = 1.0, double rho = 1.0) {
  NewtonSettings s;
  s.theta0 = std::move(theta0);
  s.density_radius = radius;
  s.threshold = c;
  s.p1_scale = rho;
  return s;
}

NewtonEstimator make(FlipProbabilities f, NewtonSettings s, NoiseModel noise = NoiseModel::gaussian(0, 1),
                     ConstraintSet set = kBox) {
  return NewtonEstimator(std::move(s), std::move(set), NoiseSchedule(noise), AttackSource::known(f));
}

}  // namespace

TEST(NewtonEstimator, BetaFromDensityInfimum) {
  auto est = make({0, 0}, settings(vec({1, 1}), 3.0));
  EXPECT_NEAR(est.beta(), oracle::normal_pdf(3.0), 1e-15);
  EXPECT_NEAR(est.beta(), 0.00443185, 1e-8);
  EXPECT_DOUBLE_EQ(est.beta_step({0, 0}), est.beta());
  auto high = make({0.8, 0.9}, settings(vec({1, 1}), 1.0));
  EXPECT_LT(high.beta(), 0.0);
  EXPECT_LT(high.beta_step({0.8, 0.9}), 0.0);
  EXPECT_NEAR(high.beta(), -0.7 * oracle::normal_pdf(1.0), 1e-15);
  EXPECT_THROW(est.beta_step({0.5, 0.5}), ConfigError);
  // beta_0 is capped at 1 even when the density is large.
  auto sharp = make({0, 0}, settings(vec({1, 1}), 0.0), NoiseModel::gaussian(0, 0.01));
  EXPECT_EQ(sharp.beta(), 1.0);
}

TEST(NewtonEstimator, DefaultRadiusIsLMPlusC) {
  NewtonSettings s;
  s.theta0 = vec({1, 1});
  s.bound_m = 0.1;
  s.threshold = 1.0;
  auto est = make({0.2, 0.3}, s);
  EXPECT_DOUBLE_EQ(est.density_radius(), kBox.norm_bound() * 0.1 + 1.0);
  // The unscaled default for the experiments' bounds makes the density vanish.
  s.bound_m = 6.0;
  EXPECT_THROW(make({0.2, 0.3}, s), NumericalError);
}

TEST(NewtonEstimator, BetaConstantWithKnownAttack) {
  auto est = make({0.2, 0.3}, settings(vec({1, 1}), 1.0));
  const double b0 = est.beta();
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (int k = 0; k < 200; ++k) {
    est.update(vec({n(rng), n(rng)}), to_bit(rng() & 1));
    EXPECT_EQ(est.beta(), b0);
  }
}

TEST(NewtonEstimator, GainScalar) {
  auto est = make({0.2, 0.3}, settings(vec({1, 1}), 1.0));
  EXPECT_EQ(est.gain_scalar(vec({0, 0})), 1.0);
  EXPECT_DOUBLE_EQ(est.gain_scalar(vec({1, 1}), 1.0), 1.0 / 3.0);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  for (int k = 0; k < 50; ++k) est.update(vec({n(rng), n(rng)}), to_bit(rng() & 1));
  for (int k = 0; k < 100; ++k) {
    const Vector phi = vec({n(rng), n(rng)});
    const double beta = 0.3 + k * 0.01;
    const double a = est.gain_scalar(phi, beta);
    EXPECT_NEAR(a * (1 + beta * beta * phi.dot(est.gain() * phi)), 1.0, 1e-12);
    EXPECT_GT(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
}

TEST(NewtonEstimator, InnovationExamples) {
  auto sure = make({0, 0}, settings(vec({0, 0}), 1.0, 40.0));
  EXPECT_EQ(sure.innovation(vec({1, 1}), Bit::one, {0, 0}), 0.0);
  auto est = make({0.2, 0.3}, settings(vec({1, 1}), 1.0));
  EXPECT_NEAR(est.innovation(vec({1, 1}), Bit::zero, {0.2, 0.3}), 0.5 * oracle::normal_cdf(-1.0) + 0.3, 1e-15);
  EXPECT_NEAR(est.innovation(vec({1, 1}), Bit::zero, {0.2, 0.3}), 0.37932762, 1e-8);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5, 5), pr(0, 0.99);
  for (int i = 0; i < 5000; ++i) {
    FlipProbabilities f{pr(rng), pr(rng)};
    const double s = est.innovation(vec({u(rng), u(rng)}), to_bit(i & 1), f);
    EXPECT_GE(s, -1.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(NewtonEstimator, ZeroRegressorChangesNothing) {
  auto est = make({0.2, 0.3}, settings(vec({1, 1}), 1.0));
  const Matrix p = est.gain();
  est.update(vec({0, 0}), Bit::zero);
  EXPECT_EQ(est.gain(), p);
  EXPECT_EQ(est.theta(), vec({1, 1}));
  EXPECT_EQ(est.logdet_gain_inverse(), 0.0);
}

TEST(NewtonEstimator, OneStepGainUpdate) {
  // beta = 1 via a sharp noise law and zero radius.
  auto est = make({0, 0}, settings(vec({1, 1}), 0.0), NoiseModel::gaussian(0, 0.01));
  est.update(vec({1, 0}), Bit::one);
  Matrix p_expected = Matrix::Identity(2, 2);
  p_expected(0, 0) = 0.5;
  EXPECT_LE((est.gain() - p_expected).cwiseAbs().maxCoeff(), 1e-15);
  Matrix inv_expected = Matrix::Identity(2, 2);
  inv_expected(0, 0) = 2.0;
  EXPECT_LE((est.gain_inverse() - inv_expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((est.gain().inverse() - inv_expected).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(est.logdet_gain_inverse(), std::log(2.0), 1e-15);
}

TEST(NewtonEstimator, ShermanMorrisonAndLogDetOverManySteps) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 1.5);
  for (auto f : {FlipProbabilities{0.2, 0.3}, FlipProbabilities{0.8, 0.9}}) {
    auto est = make(f, settings(vec({1, 1}), 0.5, 1.0, 2.0));
    double prev_beta = std::abs(est.beta());
    double prev_logdet = est.logdet_gain_inverse();
    for (int k = 0; k < 10000; ++k) {
      est.update(vec({n(rng), n(rng)}), to_bit(rng() & 1));
      const Matrix prod = est.gain() * est.gain_inverse();
      ASSERT_LT((prod - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-8) << k;
      ASSERT_LE(std::abs(est.beta()), prev_beta);
      ASSERT_GE(est.logdet_gain_inverse(), prev_logdet);
      ASSERT_TRUE(kBox.contains(est.theta()));
      prev_beta = std::abs(est.beta());
      prev_logdet = est.logdet_gain_inverse();
    }
    EXPECT_LT(std::abs(est.logdet_gain_inverse() - est.direct_logdet()), 1e-6);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(est.gain());
    EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
    const auto [lo, hi] = est.inverse_eigen_extremes();
    EXPECT_LE(lo, hi);
    EXPECT_GT(lo, 0.0);
  }
}

TEST(NewtonEstimator, MartingaleInnovationAtTruth) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  const auto noise = NoiseModel::gaussian(0, 1);
  const Vector theta = vec({3, -1});
  const FlipProbabilities f{0.2, 0.3};
  auto est = make(f, settings(theta, 1.0));
  for (int state = 0; state < 5; ++state) {
    const Vector phi = vec({u(rng), u(rng)});
    FirPlant plant(theta, noise, 70 + state);
    BinarySensor sensor(1.0);
    TamperChannel ch(f, 80 + state);
    const int n = 100000;
    double sum = 0;
    for (int i = 0; i < n; ++i) sum += est.innovation(phi, ch.transmit(sensor.sense(plant.step(phi))), f);
    const double p0 = tampered_zero_prob(f, noise, 1 - phi.dot(theta));
    EXPECT_LT(std::abs(sum / n), 3 * std::sqrt(p0 * (1 - p0)) / std::sqrt(n));
  }
}

TEST(NewtonEstimator, EstimatedModeRatchetsAfterWarmup) {
  DefenseState d;
  NewtonSettings s = settings(vec({1, 1}), 1.0);
  s.ratchet_warmup = 3;
  NewtonEstimator est(s, kBox, NoiseSchedule(NoiseModel::gaussian(0, 1)), AttackSource::estimated(d));
  const double f1 = oracle::normal_pdf(1.0);
  // Before warm-up beta follows the current estimate even upward.
  d.ingest(Bit::one, Bit::zero);  // p_hat = 1 -> c = 0
  est.update(vec({1, 0}), Bit::one);
  EXPECT_EQ(est.beta(), 0.0);
  d.ingest(Bit::one, Bit::one);  // p_hat = 0.5
  est.update(vec({1, 0}), Bit::one);
  EXPECT_NEAR(est.beta(), 0.5 * f1, 1e-15);
  d.ingest(Bit::one, Bit::one);
  for (int i = 0; i < 3; ++i) d.ingest(Bit::zero, Bit::zero);  // warmed up: p_hat = 1/3, q_hat = 0
  est.update(vec({0, 1}), Bit::one);
  const double ratcheted = est.beta();
  EXPECT_NEAR(ratcheted, (2.0 / 3.0) * f1, 1e-15);
  // After warm-up |beta| can only fall.
  d.ingest(Bit::one, Bit::one);  // p_hat = 1/4: larger candidate, ignored
  est.update(vec({0, 1}), Bit::one);
  EXPECT_EQ(est.beta(), ratcheted);
  d.ingest(Bit::zero, Bit::one);  // q_hat = 1/4: c = 1/2, smaller candidate
  est.update(vec({0, 1}), Bit::one);
  EXPECT_NEAR(est.beta(), 0.5 * f1, 1e-15);
}

TEST(NewtonEstimator, WeightedProjectionKeepsEstimateInSet) {
  const auto small = ConstraintSet::box(vec({-0.5, -0.5}), vec({0.5, 0.5}));
  auto est = make({0, 0}, settings(vec({0, 0}), 0.0, 1.0, 100.0), NoiseModel::gaussian(0, 1), small);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0, 3);
  for (int k = 0; k < 2000; ++k) {
    est.update(vec({n(rng), n(rng)}), to_bit(rng() & 1));
    ASSERT_TRUE(small.contains(est.theta()));
  }
}
