#include "hqo/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace hqo {

DiscreteOperators discretize(SpacePtr space) {
  DiscreteOperators ops;
  ops.stiffness = constrain(*space, assemble_stiffness(*space));
  ops.mass = constrain(*space, assemble_mass(*space));
  ops.space = std::move(space);
  return ops;
}

FeFunction EigenSet::function(int i) const {
  if (i < 1 || i > size()) throw std::out_of_range("eigenfunction index out of range");
  return FeFunction(space, extend_from_free(*space, free_vectors.col(i - 1)));
}

EigenSet compute_eigenpairs(const DiscreteOperators& ops, int m, const EigenSolveOptions& opts) {
  EigenSolveOptions o = opts;
  o.count = m;
  EigenPairs pairs = eigs_smallest(ops.stiffness, ops.mass, o);
  EigenSet e;
  e.family = ops.space->family();
  e.mesh_fingerprint = ops.space->mesh().fingerprint();
  e.values = std::move(pairs.values);
  e.free_vectors = std::move(pairs.vectors);
  e.residuals = std::move(pairs.residuals);
  e.space = ops.space;
  return e;
}

EigenSet eigen_ladder(const DiscreteOperators& ops, double k2, int extra,
                      const EigenSolveOptions& opts) {
  const int below = count_below(ops.stiffness, ops.mass, k2);
  const int m = std::min(below + std::max(extra, 0) + 1, ops.space->free_count());
  return compute_eigenpairs(ops, m, opts);
}

Criterion check_criterion(const Eigen::VectorXd& ladder, double k2, int i_star) {
  if (i_star < 0) throw std::invalid_argument("i* must be nonnegative");
  if (ladder.size() < i_star + 1)
    throw std::invalid_argument("eigenvalue ladder too short for the requested i*");
  Criterion c;
  c.k2 = k2;
  c.i_star = i_star;
  c.lambda_lo = (i_star == 0) ? 0.0 : ladder[i_star - 1];
  c.lambda_hi = ladder[i_star];
  c.satisfied = (i_star == 0 || c.lambda_lo < k2) && k2 < c.lambda_hi;
  double alpha = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ladder.size(); ++i)
    alpha = std::min(alpha, std::abs(ladder[i] - k2) / (1.0 + ladder[i]));
  c.alpha_star = alpha;
  return c;
}

Criterion check_criterion(const EigenSet& e, double k2, int i_star) {
  return check_criterion(e.values, k2, i_star);
}

double th_coercivity_constant(const Eigen::VectorXd& ladder, double k2) {
  const int i_star = static_cast<int>((ladder.array() < k2).count());
  if (i_star >= ladder.size())
    throw std::domain_error("ladder does not reach above k2");
  const Criterion c = check_criterion(ladder, k2, i_star);
  if (!c.satisfied || !(c.alpha_star > 0.0))
    throw std::domain_error("criterion violated: k2 coincides with a discrete eigenvalue");
  return c.alpha_star;
}

double cr_lower_bound(double lambda, double h, double kappa) {
  return lambda / (1.0 + kappa * kappa * lambda * h * h);
}

bool separation_ok(double h, int j, double lambda_ref, double kappa) {
  if (j < 1) throw std::invalid_argument("separation check needs j >= 1");
  return h <= (std::sqrt(1.0 + 1.0 / j) - 1.0) / (kappa * std::sqrt(lambda_ref));
}

std::optional<double> lower_bound_threshold(double k2, double h, double kappa) {
  const double t = kappa * kappa * k2 * h * h;
  if (t >= 1.0) return std::nullopt;
  return k2 / (1.0 - t);
}

double cr_upper_bound(const FeFunction& e, const DiscreteOperators& p1) {
  const FeFunction avg = cr_to_p1_average(e, p1.space);
  const Eigen::VectorXd v = restrict_to_free(*p1.space, avg.coefficients);
  if (v.cwiseAbs().maxCoeff() == 0.0)
    throw std::domain_error("averaged eigenfunction vanishes identically");
  return rayleigh_quotient(v, p1.stiffness, p1.mass);
}

std::vector<BoundedEigen> bound_ladder(const EigenSet& cr, const DiscreteOperators& p1,
                                       double kappa, UpperBoundMode mode) {
  if (!cr.family.is_cr()) throw std::invalid_argument("bounds need Crouzeix-Raviart eigenpairs");
  const double h = global_mesh_size(cr.space->mesh());
  const int m = cr.size();

  Eigen::VectorXd upper(m);
  if (mode == UpperBoundMode::RayleighQuotient) {
    for (int j = 1; j <= m; ++j) upper[j - 1] = cr_upper_bound(cr.function(j), p1);
  } else {
    Eigen::MatrixXd p(p1.space->free_count(), m);
    for (int j = 1; j <= m; ++j)
      p.col(j - 1) =
          restrict_to_free(*p1.space, cr_to_p1_average(cr.function(j), p1.space).coefficients);
    const Eigen::MatrixXd ap = p.transpose() * (p1.stiffness * p);
    const Eigen::MatrixXd mp = p.transpose() * (p1.mass * p);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(ap, mp,
                                                                 Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
      throw std::domain_error("averaged eigenfunctions are linearly dependent");
    upper = es.eigenvalues();
  }

  std::vector<BoundedEigen> out(static_cast<std::size_t>(m));
  for (int j = 1; j <= m; ++j) {
    auto& b = out[j - 1];
    b.lambda = cr.lambda(j);
    b.lower = cr_lower_bound(b.lambda, h, kappa);
    b.upper = upper[j - 1];
    b.separation_ok = separation_ok(h, j, b.upper, kappa);
  }
  return out;
}

IndexEstimate estimate_index(const std::vector<BoundedEigen>& bounds, double k2) {
  const auto first_above =
      std::find_if(bounds.begin(), bounds.end(), [&](const BoundedEigen& b) { return b.lower >= k2; });
  if (first_above == bounds.end())
    throw IndexError("no lower bound reaches k2; increase the number of eigenpairs (j_max)");
  IndexEstimate est;
  est.j_star = static_cast<int>(first_above - bounds.begin());
  if (est.j_star == 0) {
    est.gap_to_k2 = k2;
    est.enclosure_width = 0.0;
  } else {
    const BoundedEigen& b = bounds[static_cast<std::size_t>(est.j_star - 1)];
    est.gap_to_k2 = k2 - b.lambda;
    est.enclosure_width = b.upper - b.lower;
  }
  est.certified = est.gap_to_k2 > 0.0 && est.enclosure_width < est.gap_to_k2;
  return est;
}

}  // namespace hqo
