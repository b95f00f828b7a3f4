#pragma once

#include <Eigen/Core>

namespace hqo {

/// Quadrature on a triangle in barycentric coordinates.
/// Weights are area-normalized: they sum to one, so that
/// integral over K of f ~= |K| * sum_q w_q f(x_q).
struct QuadratureRule {
  Eigen::Matrix<double, Eigen::Dynamic, 3> points;
  Eigen::VectorXd weights;
  int degree = 0;

  Eigen::Index size() const noexcept { return weights.size(); }

  /// Rule exact for polynomials of total degree <= `degree`. Degrees up to 5
  /// use closed-form rules, higher degrees a collapsed Gauss product rule.
  static const QuadratureRule& of_degree(int degree);
};

/// Gauss-Legendre rule on [0, 1] with n points (weights sum to one).
struct LineRule {
  Eigen::VectorXd points;
  Eigen::VectorXd weights;
};
LineRule gauss_legendre(int n);

}  // namespace hqo
