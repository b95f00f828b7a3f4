#include "hqo/sparse.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>

#include "hqo/csv.hpp"

namespace hqo {

// Eigen's simplicial LDL^T uses 1x1 pivots only, which is enough here: the
// shifted pencils are quasi-definite in practice and a vanishing pivot is
// reported as a zero in the inertia rather than silently perturbed.
struct Factorization::Impl {
  Eigen::SimplicialLDLT<SparseSymMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
};

Factorization::Factorization() : impl_(std::make_unique<Impl>()) {}
Factorization::Factorization(Factorization&&) noexcept = default;
Factorization& Factorization::operator=(Factorization&&) noexcept = default;
Factorization::~Factorization() = default;

Eigen::Index Factorization::rows() const noexcept { return shifted_.rows(); }

Eigen::VectorXd Factorization::pivots() const { return impl_->ldlt.vectorD(); }

Eigen::VectorXi Factorization::permutation() const {
  // Eigen's P maps original index i to position P(i); invert for "row i of PAP^T".
  const auto& p = impl_->ldlt.permutationP().indices();
  Eigen::VectorXi perm(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) perm[p[i]] = static_cast<int>(i);
  return perm;
}

SparseSymMatrix Factorization::lower_factor() const {
  SparseSymMatrix l = impl_->ldlt.matrixL();
  return l;
}

Eigen::VectorXd Factorization::apply_inverse(const Eigen::VectorXd& b) const {
  if (b.size() != rows()) throw std::invalid_argument("right-hand side has the wrong length");
  return impl_->ldlt.solve(b);
}

Eigen::MatrixXd Factorization::apply_inverse(const Eigen::MatrixXd& b) const {
  if (b.rows() != rows()) throw std::invalid_argument("right-hand side has the wrong length");
  return impl_->ldlt.solve(b);
}

Factorization ldlt(const SparseSymMatrix& a, double sigma, const SparseSymMatrix& m) {
  if (a.rows() != a.cols() || m.rows() != m.cols() || a.rows() != m.rows())
    throw std::invalid_argument("ldlt: A and M must be square of equal size");
  Factorization f;
  f.shift_ = sigma;
  f.shifted_ = (sigma == 0.0) ? a : SparseSymMatrix(a - sigma * m);
  f.shifted_.makeCompressed();
  const Eigen::Index n = a.rows();
  if (n == 0) return f;

  f.impl_->ldlt.compute(f.shifted_);
  if (f.impl_->ldlt.info() != Eigen::Success) {
    // An exactly vanishing pivot stops the elimination: sigma is an eigenvalue.
    f.inertia_ = {0, static_cast<int>(n), 0};
    return f;
  }
  const Eigen::VectorXd d = f.impl_->ldlt.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  const double zero_tol = 64.0 * std::numeric_limits<double>::epsilon() * dmax;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(d[i]) || std::abs(d[i]) <= zero_tol)
      ++f.inertia_.zero;
    else if (d[i] < 0.0)
      ++f.inertia_.negative;
    else
      ++f.inertia_.positive;
  }
  return f;
}

Eigen::VectorXd solve(const Factorization& f, const Eigen::VectorXd& b) {
  if (f.inertia().zero > 0) throw SingularFactorization("solve with a singular factorization");
  if (b.size() != f.rows()) throw std::invalid_argument("right-hand side has the wrong length");
  if (b.size() == 0) return b;
  Eigen::VectorXd x = f.apply_inverse(b);
  const Eigen::VectorXd r = b - f.matrix() * x;
  x += f.apply_inverse(r);
  return x;
}

int count_below(const SparseSymMatrix& a, const SparseSymMatrix& m, double sigma) {
  const Factorization f = ldlt(a, sigma, m);
  if (f.inertia().zero > 0) {
    std::ostringstream msg;
    msg << "shift " << format_double(sigma)
        << " is numerically a discrete eigenvalue (resonant at this mesh)";
    throw ResonanceError(msg.str());
  }
  return f.inertia().negative;
}

SparseSymMatrix sparse_identity(Eigen::Index n) {
  SparseSymMatrix i(n, n);
  i.setIdentity();
  return i;
}

SparseSymMatrix to_sparse(const Eigen::MatrixXd& dense) {
  SparseSymMatrix s = dense.sparseView(0.0, 0.0);
  s.makeCompressed();
  return s;
}

std::string to_matrix_market(const SparseSymMatrix& a) {
  std::string out = "%%MatrixMarket matrix coordinate real symmetric\n";
  long count = 0;
  for (int col = 0; col < a.outerSize(); ++col)
    for (SparseSymMatrix::InnerIterator it(a, col); it; ++it)
      if (it.row() >= col) ++count;
  out += std::to_string(a.rows()) + ' ' + std::to_string(a.cols()) + ' ' +
         std::to_string(count) + '\n';
  for (int col = 0; col < a.outerSize(); ++col)
    for (SparseSymMatrix::InnerIterator it(a, col); it; ++it)
      if (it.row() >= col)
        out += std::to_string(it.row() + 1) + ' ' + std::to_string(col + 1) + ' ' +
               format_double(it.value()) + '\n';
  return out;
}

}  // namespace hqo
