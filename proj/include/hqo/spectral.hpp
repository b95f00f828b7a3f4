#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "hqo/space.hpp"
#include "hqo/sparse.hpp"

namespace hqo {

/// Stiffness and mass restricted to the free DOFs of a space.
struct DiscreteOperators {
  SpacePtr space;
  SparseSymMatrix stiffness;
  SparseSymMatrix mass;
};

DiscreteOperators discretize(SpacePtr space);

/// Ascending discrete eigenpairs of one space.
struct EigenSet {
  ElementFamily family;
  std::uint64_t mesh_fingerprint = 0;
  Eigen::VectorXd values;
  /// Eigenvectors over the free DOFs (columns), M-orthonormal.
  Eigen::MatrixXd free_vectors;
  Eigen::VectorXd residuals;
  SpacePtr space;

  int size() const noexcept { return static_cast<int>(values.size()); }
  /// Eigenvalue with 1-based index i, as in lambda_h^(i).
  double lambda(int i) const { return values[i - 1]; }
  /// Eigenfunction with 1-based index i over all DOFs.
  FeFunction function(int i) const;
};

/// The m smallest eigenpairs of the space's operators.
EigenSet compute_eigenpairs(const DiscreteOperators& ops, int m,
                            const EigenSolveOptions& opts = {});

/// Enough eigenpairs to test the criterion at k2 and drive the estimator:
/// m = count_below(k2) + extra + 1, capped at the number of free DOFs.
EigenSet eigen_ladder(const DiscreteOperators& ops, double k2, int extra = 3,
                      const EigenSolveOptions& opts = {});

struct Criterion {
  double k2 = 0.0;
  int i_star = 0;
  double lambda_lo = 0.0;  ///< lambda_h^(i*), 0 when i* = 0
  double lambda_hi = 0.0;  ///< lambda_h^(i*+1)
  bool satisfied = false;
  double alpha_star = 0.0;
};

/// lambda_h^(i*) < k2 < lambda_h^(i*+1), with alpha* = min_i |lambda_i - k2| / (1 + lambda_i)
/// over the given ladder. Throws std::invalid_argument when the ladder is too short.
Criterion check_criterion(const Eigen::VectorXd& ladder, double k2, int i_star);
Criterion check_criterion(const EigenSet& e, double k2, int i_star);

/// Coercivity constant of the sign-flipped discrete form; throws
/// std::domain_error unless the criterion holds at i* = count of eigenvalues below k2.
double th_coercivity_constant(const Eigen::VectorXd& ladder, double k2);

inline constexpr double default_kappa = 0.1932;

/// lambda / (1 + kappa^2 lambda h^2).
double cr_lower_bound(double lambda, double h, double kappa = default_kappa);

/// h <= (sqrt(1 + 1/j) - 1) / (kappa sqrt(lambda_ref)).
bool separation_ok(double h, int j, double lambda_ref, double kappa = default_kappa);

/// Rayleigh quotient of the vertex-averaged conforming companion of a CR
/// eigenfunction. `p1` are the P1 operators on the same mesh.
double cr_upper_bound(const FeFunction& e, const DiscreteOperators& p1);

struct BoundedEigen {
  double lambda = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool separation_ok = false;
};

enum class UpperBoundMode {
  RayleighQuotient,  ///< per eigenfunction
  RayleighRitz,      ///< Ritz values on the span of all averaged eigenfunctions
};

/// Lower and upper references for every CR eigenvalue in `cr`, with h the
/// global mesh size.
std::vector<BoundedEigen> bound_ladder(const EigenSet& cr, const DiscreteOperators& p1,
                                       double kappa = default_kappa,
                                       UpperBoundMode mode = UpperBoundMode::RayleighQuotient);

class IndexError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IndexEstimate {
  int j_star = 0;
  bool certified = false;
  double gap_to_k2 = 0.0;        ///< k2 - lambda_h^(j*)
  double enclosure_width = 0.0;  ///< upper - lower at j*, 0 when j* = 0
};

/// j* is the number of lower bounds below k2, i.e. the smallest j with
/// lower(j+1) >= k2. Certified iff the enclosure width at j* is below the
/// positive gap k2 - lambda_h^(j*). Throws IndexError when
/// no lower bound in the list reaches k2.
IndexEstimate estimate_index(const std::vector<BoundedEigen>& bounds, double k2);

/// Smallest discrete eigenvalue whose lower bound reaches k2 at mesh size h,
/// k2 / (1 - kappa^2 k2 h^2), or nullopt when kappa^2 k2 h^2 >= 1.
std::optional<double> lower_bound_threshold(double k2, double h, double kappa = default_kappa);

}  // namespace hqo
