#include "hqo/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace hqo {

LineRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  LineRule rule{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 1.0 / ((1.0 - x * x) * dp * dp);  // half of the [-1,1] weight
    rule.points[i] = 0.5 * (1.0 - x);
    rule.points[n - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[i] = rule.weights[n - 1 - i] = w;
  }
  return rule;
}

namespace {

QuadratureRule centroid_rule() {
  QuadratureRule r;
  r.points.resize(1, 3);
  r.points << 1.0 / 3, 1.0 / 3, 1.0 / 3;
  r.weights = Eigen::VectorXd::Ones(1);
  r.degree = 1;
  return r;
}

QuadratureRule three_point_rule() {
  QuadratureRule r;
  r.points.resize(3, 3);
  const double a = 2.0 / 3, b = 1.0 / 6;
  r.points << a, b, b, b, a, b, b, b, a;
  r.weights = Eigen::VectorXd::Constant(3, 1.0 / 3);
  r.degree = 2;
  return r;
}

// Radon's seven-point rule, degree 5.
QuadratureRule seven_point_rule() {
  QuadratureRule r;
  r.points.resize(7, 3);
  r.weights.resize(7);
  const double s = std::sqrt(15.0);
  const double a1 = (6.0 - s) / 21.0, a2 = (6.0 + s) / 21.0;
  const double w1 = (155.0 - s) / 1200.0, w2 = (155.0 + s) / 1200.0;
  r.points.row(0) << 1.0 / 3, 1.0 / 3, 1.0 / 3;
  r.weights[0] = 9.0 / 40.0;
  int q = 1;
  for (auto [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
    const double b = 1.0 - 2.0 * a;
    r.points.row(q) << b, a, a;
    r.points.row(q + 1) << a, b, a;
    r.points.row(q + 2) << a, a, b;
    r.weights.segment(q, 3).setConstant(w);
    q += 3;
  }
  r.degree = 5;
  return r;
}

// Duffy-collapsed tensor Gauss rule on the reference triangle.
QuadratureRule collapsed_rule(int degree) {
  const int n = (degree + 3) / 2;
  const LineRule g = gauss_legendre(n);
  QuadratureRule r;
  r.points.resize(n * n, 3);
  r.weights.resize(n * n);
  int q = 0;
  for (int i = 0; i < n; ++i) {
    const double u = g.points[i];
    for (int j = 0; j < n; ++j) {
      const double x = u, y = g.points[j] * (1.0 - u);
      r.points.row(q) << 1.0 - x - y, x, y;
      r.weights[q] = 2.0 * g.weights[i] * g.weights[j] * (1.0 - u);
      ++q;
    }
  }
  r.degree = 2 * n - 2;
  return r;
}

}  // namespace

const QuadratureRule& QuadratureRule::of_degree(int degree) {
  if (degree < 0) throw std::invalid_argument("quadrature degree must be non-negative");
  static std::mutex mutex;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(degree);
  if (it != cache.end()) return it->second;
  QuadratureRule rule = degree <= 1   ? centroid_rule()
                        : degree == 2 ? three_point_rule()
                        : degree <= 5 ? seven_point_rule()
                                      : collapsed_rule(degree);
  return cache.emplace(degree, std::move(rule)).first->second;
}

}  // namespace hqo
