#include "newton_estimator.hpp"

#include <cmath>
#include <sstream>

#include "errors.hpp"

namespace tamperid {
namespace {

double sign_of(double x) { return x < 0.0 ? -1.0 : 1.0; }

}  // namespace

NewtonEstimator::NewtonEstimator(NewtonSettings settings, ConstraintSet set, NoiseSchedule noise,
                                 AttackSource attack)
    : settings_(std::move(settings)), set_(std::move(set)), noise_(std::move(noise)), attack_(attack) {
  if (!(settings_.p1_scale > 0.0) || !std::isfinite(settings_.p1_scale))
    throw ConfigError("newton.P1_scale", "newton.P1_scale must be finite and > 0");
  if (!std::isfinite(settings_.threshold)) throw ConfigError("sensor.C", "sensor threshold must be finite");
  if (settings_.theta0.size() != set_.dim())
    throw ConfigError("newton.theta0", "newton.theta0 dimension does not match the parameter set");
  if (!set_.contains(settings_.theta0))
    throw ConfigError("newton.theta0", "newton.theta0 must lie in the parameter set");
  if (settings_.density_radius) {
    if (!(*settings_.density_radius >= 0.0) || !std::isfinite(*settings_.density_radius))
      throw ConfigError("newton.density_radius", "newton.density_radius must be finite and >= 0");
    radius_ = *settings_.density_radius;
  } else {
    if (!(settings_.bound_m > 0.0)) throw ConfigError("input.bound_M", "input.bound_M must be > 0");
    radius_ = set_.norm_bound() * settings_.bound_m + std::abs(settings_.threshold);
  }
  if (settings_.logdet_check_stride < 1)
    throw ConfigError("newton.logdet_check_stride", "newton.logdet_check_stride must be >= 1");

  const Eigen::Index n = set_.dim();
  theta_ = settings_.theta0;
  p_ = Matrix::Identity(n, n) * settings_.p1_scale;
  p_inv_ = Matrix::Identity(n, n) / settings_.p1_scale;
  logdet_p_inv_ = -static_cast<double>(n) * std::log(settings_.p1_scale);

  // beta_0 = sign(c) min{1, |c| inf f_1}
  const FlipProbabilities flips = attack_.current();
  beta_ = sign_of(flips.contrast()) * std::min(1.0, density_term(flips, 1));
}

double NewtonEstimator::density_term(const FlipProbabilities& flips, std::int64_t k) const {
  return std::abs(flips.contrast()) * noise_.at(k).density_inf(radius_);
}

double NewtonEstimator::beta_step(const FlipProbabilities& flips) const {
  if (flips.degenerate()) throw ConfigError("channel.p+channel.q", "beta undefined for p + q = 1");
  return sign_of(flips.contrast()) * std::min(std::abs(beta_), density_term(flips, k_ + 1));
}

double NewtonEstimator::gain_scalar(const Vector& phi, double beta) const {
  if (phi.size() != theta_.size()) throw DimensionError("regressor dimension does not match the estimate");
  return 1.0 / (1.0 + beta * beta * phi.dot(p_ * phi));
}

double NewtonEstimator::innovation(const Vector& phi, Bit received, const FlipProbabilities& flips) const {
  if (phi.size() != theta_.size()) throw DimensionError("regressor dimension does not match the estimate");
  const double c = flips.contrast();
  return c * noise_.at(k_).cdf(settings_.threshold - theta_.dot(phi)) + flips.q - to_int(received);
}

void NewtonEstimator::update(const Vector& phi, Bit received) {
  if (phi.size() != theta_.size()) throw DimensionError("regressor dimension does not match the estimate");
  const FlipProbabilities flips = attack_.current();

  double beta;
  if (!attack_.is_estimated()) {
    beta = beta_step(flips);
  } else {
    // Early frequency estimates are noisy and may even satisfy p + q = 1; a
    // running minimum started then would pin |beta| near 0 for good.
    const DefenseState* d = attack_.defense();
    if (!ratchet_started_ && d->warmed_up(settings_.ratchet_warmup)) {
      ratchet_started_ = true;
      beta_ = sign_of(flips.contrast()) * density_term(flips, k_ + 1);
    }
    const double fresh = sign_of(flips.contrast()) * std::min(1.0, density_term(flips, k_ + 1));
    beta = ratchet_started_ ? sign_of(flips.contrast()) * std::min(std::abs(beta_), std::abs(fresh)) : fresh;
  }

  const Vector p_phi = p_ * phi;
  const double quad = phi.dot(p_phi);
  const double b2 = beta * beta;
  const double a = 1.0 / (1.0 + b2 * quad);
  const double s_tilde = innovation(phi, received, flips);

  const Vector candidate = theta_ + (a * beta * s_tilde) * p_phi;

  p_.noalias() -= (b2 * a) * p_phi * p_phi.transpose();
  p_ = 0.5 * (p_ + p_.transpose()).eval();
  p_inv_.noalias() += b2 * phi * phi.transpose();
  logdet_p_inv_ += std::log1p(b2 * quad);

  Eigen::LLT<Matrix> llt(p_);
  if (llt.info() != Eigen::Success) {
    // Rank-one downdate lost definiteness to roundoff; rebuild from P^-1.
    Eigen::LLT<Matrix> inv_llt(p_inv_);
    if (inv_llt.info() != Eigen::Success) {
      std::ostringstream os;
      os << "gain matrix lost positive definiteness at step " << k_;
      throw NumericalError(os.str());
    }
    p_ = inv_llt.solve(Matrix::Identity(p_inv_.rows(), p_inv_.cols()));
    ++repairs_;
  }

  theta_ = project_weighted(set_, WeightMatrix(p_inv_), candidate);
  beta_ = beta;

  if (k_ % settings_.logdet_check_stride == 0) {
    const double direct = direct_logdet();
    if (std::abs(direct - logdet_p_inv_) > settings_.logdet_tolerance) {
      std::ostringstream os;
      os << "accumulated log det P^-1 drifted from the factorised value at step " << k_ << " ("
         << logdet_p_inv_ << " vs " << direct << ")";
      throw NumericalError(os.str());
    }
  }
  ++k_;
}

std::pair<double, double> NewtonEstimator::inverse_eigen_extremes() const {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(p_inv_, Eigen::EigenvaluesOnly);
  return {eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff()};
}

double NewtonEstimator::direct_logdet() const {
  Eigen::LLT<Matrix> llt(p_inv_);
  if (llt.info() != Eigen::Success) throw NumericalError("P^-1 is not positive definite");
  const Matrix& l = llt.matrixLLT();
  return 2.0 * l.diagonal().array().log().sum();
}

}  // namespace tamperid
