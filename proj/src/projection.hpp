#pragma once

#include <Eigen/Dense>

namespace tamperid {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Convex compact parameter set: an axis-aligned box or a Euclidean ball.
class ConstraintSet {
 public:
  enum class Shape { box, ball };

  static ConstraintSet box(Vector lower, Vector upper);
  static ConstraintSet ball(Vector center, double radius);

  Shape shape() const noexcept { return shape_; }
  Eigen::Index dim() const noexcept { return a_.size(); }
  const Vector& lower() const noexcept { return a_; }
  const Vector& upper() const noexcept { return b_; }
  const Vector& center() const noexcept { return a_; }
  double radius() const noexcept { return radius_; }

  bool contains(const Vector& x) const;
  // sup over the set of the Euclidean norm.
  double norm_bound() const;

 private:
  ConstraintSet(Shape shape, Vector a, Vector b, double radius)
      : shape_(shape), a_(std::move(a)), b_(std::move(b)), radius_(radius) {}

  Shape shape_;
  Vector a_;  // lower corner or center
  Vector b_;  // upper corner (box only)
  double radius_ = 0.0;
};

// Symmetric positive-definite weight for the norm ||x||_Q^2 = x' Q x.
class WeightMatrix {
 public:
  // Throws NumericalError if Q is asymmetric beyond 1e-12 (relative) or not
  // positive definite.
  explicit WeightMatrix(Matrix q);
  const Matrix& matrix() const noexcept { return q_; }

 private:
  Matrix q_;
};

struct WeightedProjectionOptions {
  int max_iterations = 100;
  double kkt_tolerance = 1e-10;
  double bisection_tolerance = 1e-12;
};

Vector project_euclidean(const ConstraintSet& set, const Vector& x);

// argmin over the set of (x - w)' Q (x - w). Interior points are returned
// unchanged.
Vector project_weighted(const ConstraintSet& set, const WeightMatrix& q, const Vector& x,
                        const WeightedProjectionOptions& options = {});

}  // namespace tamperid
