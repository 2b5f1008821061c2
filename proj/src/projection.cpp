#include "projection.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "errors.hpp"

namespace tamperid {
namespace {

void check_dim(const ConstraintSet& set, const Vector& x) {
  if (x.size() != set.dim()) {
    std::ostringstream os;
    os << "vector has dimension " << x.size() << ", constraint set has " << set.dim();
    throw DimensionError(os.str());
  }
}

enum class Bound : signed char { lower = -1, free = 0, upper = 1 };

// Primal active-set method for min 1/2 (w - x)' Q (w - x) over l <= w <= u.
// Starts from the Euclidean clamp, which is feasible.
Vector box_weighted(const Vector& lo, const Vector& hi, const Matrix& q, const Vector& x,
                    const WeightedProjectionOptions& opt) {
  const Eigen::Index n = x.size();
  Vector w = x.cwiseMax(lo).cwiseMin(hi);
  std::vector<Bound> state(static_cast<std::size_t>(n), Bound::free);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (x(i) < lo(i)) state[i] = Bound::lower;
    if (x(i) > hi(i)) state[i] = Bound::upper;
  }
  const double scale = 1.0 + q.cwiseAbs().maxCoeff() * (x - w).cwiseAbs().maxCoeff();

  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    std::vector<Eigen::Index> free_idx;
    for (Eigen::Index i = 0; i < n; ++i)
      if (state[i] == Bound::free) free_idx.push_back(i);

    // Minimiser over the free coordinates with the active ones held fixed.
    Vector target = w;
    if (!free_idx.empty()) {
      const auto nf = static_cast<Eigen::Index>(free_idx.size());
      Matrix qff(nf, nf);
      Vector rhs(nf);
      for (Eigen::Index a = 0; a < nf; ++a) {
        rhs(a) = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
          if (state[j] != Bound::free) rhs(a) -= q(free_idx[a], j) * (w(j) - x(j));
        for (Eigen::Index b = 0; b < nf; ++b) qff(a, b) = q(free_idx[a], free_idx[b]);
      }
      const Vector delta = qff.llt().solve(rhs);
      for (Eigen::Index a = 0; a < nf; ++a) target(free_idx[a]) = x(free_idx[a]) + delta(a);
    }

    // Walk toward the target until the first bound blocks.
    double step = 1.0;
    Eigen::Index blocking = -1;
    for (const Eigen::Index i : free_idx) {
      const double d = target(i) - w(i);
      if (d > 0.0 && target(i) > hi(i)) {
        const double t = (hi(i) - w(i)) / d;
        if (t < step) { step = t; blocking = i; }
      } else if (d < 0.0 && target(i) < lo(i)) {
        const double t = (lo(i) - w(i)) / d;
        if (t < step) { step = t; blocking = i; }
      }
    }
    w += step * (target - w);
    if (blocking >= 0) {
      state[blocking] = target(blocking) > hi(blocking) ? Bound::upper : Bound::lower;
      w(blocking) = state[blocking] == Bound::upper ? hi(blocking) : lo(blocking);
      continue;
    }

    // Free block is optimal; check multipliers of the active bounds.
    const Vector g = q * (w - x);
    Eigen::Index release = -1;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double violation = 0.0;
      if (state[i] == Bound::lower) violation = -g(i);
      if (state[i] == Bound::upper) violation = g(i);
      if (violation > worst) { worst = violation; release = i; }
    }
    if (release < 0 || worst <= opt.kkt_tolerance * scale) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (state[i] == Bound::lower) w(i) = lo(i);
        if (state[i] == Bound::upper) w(i) = hi(i);
      }
      return w;
    }
    state[release] = Bound::free;
  }
  throw NumericalError("weighted box projection did not converge within the iteration cap");
}

// Ball: w = c + (Q + mu I)^{-1} Q (x - c), with mu >= 0 chosen so that
// ||w - c|| = r. The norm is decreasing in mu, so bisection applies.
Vector ball_weighted(const Vector& c, double r, const Matrix& q, const Vector& x,
                     const WeightedProjectionOptions& opt) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(q);
  const Vector lambda = eig.eigenvalues();
  const Vector z = eig.eigenvectors().transpose() * (x - c);
  auto radius_at = [&](double mu) {
    return (lambda.array() / (lambda.array() + mu) * z.array()).matrix().norm();
  };
  double lo = 0.0;
  double hi = lambda.maxCoeff() * z.norm() / r;
  int iter = 0;
  while (hi - lo > opt.bisection_tolerance * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (radius_at(mid) > r) lo = mid;
    else hi = mid;
    if (++iter > 400) throw NumericalError("weighted ball projection: bisection did not converge");
  }
  Vector y = (lambda.array() / (lambda.array() + hi) * z.array()).matrix();
  Vector w = c + eig.eigenvectors() * y;
  const double norm = (w - c).norm();
  if (norm > r) w = c + (w - c) * (r / norm);
  return w;
}

}  // namespace

ConstraintSet ConstraintSet::box(Vector lower, Vector upper) {
  if (lower.size() != upper.size() || lower.size() == 0)
    throw ConfigError("theta_set.lower", "box bounds must be non-empty and of equal dimension");
  if (!lower.allFinite() || !upper.allFinite())
    throw ConfigError("theta_set.lower", "box bounds must be finite");
  if ((lower.array() > upper.array()).any())
    throw ConfigError("theta_set.upper", "box is empty: lower > upper in some coordinate");
  return ConstraintSet(Shape::box, std::move(lower), std::move(upper), 0.0);
}

ConstraintSet ConstraintSet::ball(Vector center, double radius) {
  if (center.size() == 0 || !center.allFinite())
    throw ConfigError("theta_set.center", "ball center must be non-empty and finite");
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw ConfigError("theta_set.radius", "ball radius must be finite and > 0");
  return ConstraintSet(Shape::ball, std::move(center), Vector(), radius);
}

bool ConstraintSet::contains(const Vector& x) const {
  check_dim(*this, x);
  if (shape_ == Shape::box) return (x.array() >= a_.array()).all() && (x.array() <= b_.array()).all();
  return (x - a_).norm() <= radius_;
}

double ConstraintSet::norm_bound() const {
  if (shape_ == Shape::box) return a_.cwiseAbs().cwiseMax(b_.cwiseAbs()).norm();
  return a_.norm() + radius_;
}

WeightMatrix::WeightMatrix(Matrix q) : q_(std::move(q)) {
  if (q_.rows() != q_.cols() || q_.rows() == 0) throw DimensionError("weight matrix must be square");
  const double scale = std::max(1.0, q_.cwiseAbs().maxCoeff());
  if ((q_ - q_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw NumericalError("weight matrix is not symmetric");
  Eigen::LLT<Matrix> llt(q_);
  if (llt.info() != Eigen::Success) throw NumericalError("weight matrix is not positive definite");
}

Vector project_euclidean(const ConstraintSet& set, const Vector& x) {
  if (set.contains(x)) return x;
  if (set.shape() == ConstraintSet::Shape::box) return x.cwiseMax(set.lower()).cwiseMin(set.upper());
  const Vector d = x - set.center();
  return set.center() + d * (set.radius() / d.norm());
}

Vector project_weighted(const ConstraintSet& set, const WeightMatrix& q, const Vector& x,
                        const WeightedProjectionOptions& options) {
  if (q.matrix().rows() != set.dim()) throw DimensionError("weight matrix and constraint set disagree in dimension");
  if (set.contains(x)) return x;
  if (set.shape() == ConstraintSet::Shape::box)
    return box_weighted(set.lower(), set.upper(), q.matrix(), x, options);
  return ball_weighted(set.center(), set.radius(), q.matrix(), x, options);
}

}  // namespace tamperid
