#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace hqo {

/// Symmetric sparse matrix storing the full (upper and lower) pattern with
/// sorted indices and no duplicates. For a symmetric matrix the compressed
/// column arrays coincide with the CSR arrays.
using SparseSymMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

struct Inertia {
  int negative = 0;
  int zero = 0;
  int positive = 0;

  friend bool operator==(const Inertia&, const Inertia&) = default;
};

class SingularFactorization : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a shift coincides numerically with a generalized eigenvalue.
class ResonanceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// LDL^T factorization of the shifted pencil A - sigma*M under a fill-reducing
/// symmetric permutation, P (A - sigma M) P^T = L D L^T. By Sylvester's law of
/// inertia the signs of D count the generalized eigenvalues below sigma.
class Factorization {
 public:
  Factorization(Factorization&&) noexcept;
  Factorization& operator=(Factorization&&) noexcept;
  ~Factorization();

  Eigen::Index rows() const noexcept;
  double shift() const noexcept { return shift_; }
  const Inertia& inertia() const noexcept { return inertia_; }
  /// The factored matrix A - sigma*M.
  const SparseSymMatrix& matrix() const noexcept { return shifted_; }

  /// Pivots (the diagonal of D, in permuted order).
  Eigen::VectorXd pivots() const;
  /// Fill-reducing permutation as an index vector: row i of P A P^T is row perm[i] of A.
  Eigen::VectorXi permutation() const;
  /// Unit lower-triangular factor L (strict lower part stored).
  SparseSymMatrix lower_factor() const;

  /// Solves (A - sigma M) x = b without refinement.
  Eigen::VectorXd apply_inverse(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd apply_inverse(const Eigen::MatrixXd& b) const;

 private:
  friend Factorization ldlt(const SparseSymMatrix&, double, const SparseSymMatrix&);
  Factorization();

  struct Impl;
  std::unique_ptr<Impl> impl_;
  SparseSymMatrix shifted_;
  double shift_ = 0.0;
  Inertia inertia_;
};

/// Factors A - sigma*M. Pivots with |d| <= 64*eps*max|d| are counted as zero.
/// Throws std::invalid_argument on dimension mismatch.
Factorization ldlt(const SparseSymMatrix& a, double sigma, const SparseSymMatrix& m);

/// Solves with one step of iterative refinement. Throws SingularFactorization
/// when the factorization has zero pivots.
Eigen::VectorXd solve(const Factorization& f, const Eigen::VectorXd& b);

/// Number of generalized eigenvalues of (A, M) strictly below sigma. Throws
/// ResonanceError when sigma is numerically an eigenvalue.
int count_below(const SparseSymMatrix& a, const SparseSymMatrix& m, double sigma);

/// Sparse identity of size n.
SparseSymMatrix sparse_identity(Eigen::Index n);
/// Builds a sparse matrix from a dense one, dropping exact zeros.
SparseSymMatrix to_sparse(const Eigen::MatrixXd& dense);

/// MatrixMarket "coordinate real symmetric" text (lower triangle, 1-based).
std::string to_matrix_market(const SparseSymMatrix& a);

// Generalized symmetric eigenproblem -------------------------------------------

struct EigenSolveOptions {
  int count = 1;           ///< number of eigenpairs wanted
  double tol = 1e-10;      ///< relative residual tolerance
  int max_iter = 60;       ///< maximum number of restarts
  int block_size = 4;
  std::uint64_t seed = 0;  ///< start block generator seed
  int dense_threshold = 200;  ///< problems up to this size use a dense solver
  double shift = -1.0;     ///< shift-invert pole, below the spectrum
};

/// Ascending eigenpairs with M-orthonormal eigenvectors (columns).
struct EigenPairs {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  Eigen::VectorXd residuals;  ///< ||A x - lambda M x||_2 per pair
  int restarts = 0;
};

class EigenSolverError : public std::runtime_error {
 public:
  EigenSolverError(const std::string& what, Eigen::VectorXd best_residuals)
      : std::runtime_error(what), best_residuals_(std::move(best_residuals)) {}
  const Eigen::VectorXd& best_residuals() const noexcept { return best_residuals_; }

 private:
  Eigen::VectorXd best_residuals_;
};

/// The `opts.count` algebraically smallest eigenpairs of A x = lambda M x,
/// multiplicities counted. A must be symmetric positive semidefinite and M
/// symmetric positive definite. Uses block shift-invert Lanczos with full
/// reorthogonalization and thick restarts; completeness below the last
/// returned eigenvalue is verified by an inertia count.
EigenPairs eigs_smallest(const SparseSymMatrix& a, const SparseSymMatrix& m,
                         const EigenSolveOptions& opts);

/// Residual norm ||A x - lambda M x||_2 divided by (1 + |lambda|) ||x||_M.
double relative_residual(const SparseSymMatrix& a, const SparseSymMatrix& m, double lambda,
                         const Eigen::VectorXd& x);

}  // namespace hqo
