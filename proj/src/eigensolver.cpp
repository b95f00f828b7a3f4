#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "hqo/sparse.hpp"

namespace hqo {

namespace {

void normalize_signs(Eigen::MatrixXd& x) {
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    Eigen::Index imax = 0;
    x.col(j).cwiseAbs().maxCoeff(&imax);
    if (x(imax, j) < 0.0) x.col(j) = -x.col(j);
  }
}

EigenPairs dense_eigs(const SparseSymMatrix& a, const SparseSymMatrix& m, int count) {
  const Eigen::MatrixXd ad(a);
  const Eigen::MatrixXd md(m);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(ad, md);
  if (es.info() != Eigen::Success)
    throw EigenSolverError("dense generalized eigensolver failed", Eigen::VectorXd());
  EigenPairs out;
  out.values = es.eigenvalues().head(count);
  out.vectors = es.eigenvectors().leftCols(count);
  // Re-normalize in the M inner product; the dense solver already is, up to rounding.
  for (int j = 0; j < count; ++j) out.vectors.col(j) /= std::sqrt(out.vectors.col(j).dot(md * out.vectors.col(j)));
  normalize_signs(out.vectors);
  out.residuals.resize(count);
  for (int j = 0; j < count; ++j)
    out.residuals[j] = (ad * out.vectors.col(j) - out.values[j] * (md * out.vectors.col(j))).norm();
  return out;
}

/// M-orthonormal basis grown block by block, with H = V^T A V kept in sync.
class Subspace {
 public:
  Subspace(const SparseSymMatrix& a, const SparseSymMatrix& m, std::mt19937_64& rng)
      : a_(a), m_(m), rng_(rng), n_(a.rows()) {}

  Eigen::Index size() const { return k_; }
  const Eigen::MatrixXd& basis() const { return v_; }
  Eigen::Ref<const Eigen::MatrixXd> columns() const { return v_.leftCols(k_); }
  Eigen::Ref<const Eigen::MatrixXd> projected() const { return h_.topLeftCorner(k_, k_); }

  void reserve(Eigen::Index kmax) {
    v_.resize(n_, kmax);
    h_.resize(kmax, kmax);
  }

  /// Orthonormalizes the columns of w against the basis and appends them.
  /// Directions that vanish are replaced by random vectors. Returns the
  /// range of the appended columns.
  std::pair<Eigen::Index, Eigen::Index> append(Eigen::MatrixXd w) {
    const Eigen::Index start = k_;
    const Eigen::Index room = v_.cols() - k_;
    if (w.cols() > room) w.conservativeResize(Eigen::NoChange, room);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      Eigen::VectorXd x = w.col(j);
      bool ok = orthonormalize(x);
      for (int attempt = 0; !ok && attempt < 5; ++attempt) {
        x = random_vector();
        ok = orthonormalize(x);
      }
      if (!ok) break;
      v_.col(k_) = x;
      ++k_;
    }
    if (k_ > start) {
      const Eigen::Index b = k_ - start;
      const Eigen::MatrixXd aw = a_ * v_.middleCols(start, b);
      const Eigen::MatrixXd c = v_.leftCols(k_).transpose() * aw;
      h_.block(0, start, k_, b) = c;
      h_.block(start, 0, b, start) = c.topRows(start).transpose();
      // Symmetrize the diagonal block against rounding.
      Eigen::MatrixXd d = h_.block(start, start, b, b);
      h_.block(start, start, b, b) = 0.5 * (d + d.transpose());
    }
    return {start, k_};
  }

  /// Replaces the basis by V*S (S with orthonormal columns) and H by diag(theta).
  void compress(const Eigen::MatrixXd& s, const Eigen::VectorXd& theta) {
    const Eigen::Index q = s.cols();
    Eigen::MatrixXd nv = v_.leftCols(k_) * s;
    v_.leftCols(q) = nv;
    h_.topLeftCorner(q, q).setZero();
    h_.topLeftCorner(q, q).diagonal() = theta;
    k_ = q;
  }

  Eigen::MatrixXd random_block(Eigen::Index b) {
    Eigen::MatrixXd r(n_, b);
    for (Eigen::Index j = 0; j < b; ++j) r.col(j) = random_vector();
    return r;
  }

 private:
  Eigen::VectorXd random_vector() {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::VectorXd x(n_);
    for (Eigen::Index i = 0; i < n_; ++i) x[i] = dist(rng_);
    return x;
  }

  // Two passes of classical Gram-Schmidt in the M inner product.
  bool orthonormalize(Eigen::VectorXd& x) const {
    double norm0 = std::sqrt(std::max(0.0, x.dot(m_ * x)));
    if (!(norm0 > 0.0)) return false;
    for (int pass = 0; pass < 2; ++pass) {
      if (k_ == 0) break;
      const Eigen::VectorXd mx = m_ * x;
      const Eigen::VectorXd c = v_.leftCols(k_).transpose() * mx;
      x.noalias() -= v_.leftCols(k_) * c;
    }
    const double norm = std::sqrt(std::max(0.0, x.dot(m_ * x)));
    if (!(norm > 1e-10 * norm0)) return false;
    x /= norm;
    return true;
  }

  const SparseSymMatrix& a_;
  const SparseSymMatrix& m_;
  std::mt19937_64& rng_;
  Eigen::Index n_;
  Eigen::Index k_ = 0;
  Eigen::MatrixXd v_;
  Eigen::MatrixXd h_;
};

}  // namespace

double relative_residual(const SparseSymMatrix& a, const SparseSymMatrix& m, double lambda,
                         const Eigen::VectorXd& x) {
  const Eigen::VectorXd mx = m * x;
  const double mnorm = std::sqrt(x.dot(mx));
  return (a * x - lambda * mx).norm() / ((1.0 + std::abs(lambda)) * mnorm);
}

EigenPairs eigs_smallest(const SparseSymMatrix& a, const SparseSymMatrix& m,
                         const EigenSolveOptions& opts) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || m.rows() != n || m.cols() != n)
    throw std::invalid_argument("eigs_smallest: A and M must be square of equal size");
  if (opts.count < 1) throw std::invalid_argument("eigs_smallest: count must be at least 1");
  if (!(opts.tol > 0.0)) throw std::invalid_argument("eigs_smallest: tol must be positive");
  if (opts.count > n)
    throw std::invalid_argument("eigs_smallest: more eigenpairs requested than the dimension");

  const int want = opts.count;
  const int b = std::max(1, opts.block_size);
  const Eigen::Index kmax = std::max<Eigen::Index>({2 * want + 2 * b, want + 4 * b, 24});
  // Large ladders on small problems are cheaper to solve densely.
  if (n <= opts.dense_threshold || 3 * kmax >= n) return dense_eigs(a, m, want);

  const Factorization op = ldlt(a, opts.shift, m);
  if (op.inertia().zero > 0 || op.inertia().negative > 0)
    throw std::invalid_argument("eigs_smallest: shift is not below the spectrum");
  // One refinement step keeps the Krylov space from stagnating at the
  // accuracy of the factorization.
  auto apply_t = [&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
    const Eigen::MatrixXd rhs = m * x;
    Eigen::MatrixXd y = op.apply_inverse(rhs);
    y += op.apply_inverse(Eigen::MatrixXd(rhs - op.matrix() * y));
    return y;
  };

  std::mt19937_64 rng(opts.seed);
  Subspace space(a, m, rng);
  space.reserve(kmax);
  auto range = space.append(space.random_block(b));

  Eigen::VectorXd best = Eigen::VectorXd::Constant(want, std::numeric_limits<double>::infinity());
  Eigen::VectorXd previous;
  int restarts = 0;

  while (true) {
    // Expand by the shift-invert operator applied to the most recent block.
    if (space.size() < kmax) {
      Eigen::MatrixXd last = space.basis().middleCols(range.first, range.second - range.first);
      if (last.cols() == 0) last = space.random_block(b);
      range = space.append(apply_t(last));
      if (range.second == range.first) range = space.append(space.random_block(b));
    }

    const Eigen::Index k = space.size();
    if (k < want + b && k < kmax) continue;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> rr(space.projected());
    const Eigen::VectorXd theta = rr.eigenvalues();
    const bool full = (k >= kmax);
    bool settled = false;
    if (previous.size() >= want) {
      settled = true;
      for (int i = 0; i < want; ++i)
        if (std::abs(theta[i] - previous[i]) > 1e-13 * (1.0 + std::abs(theta[i]))) settled = false;
    }
    previous = theta.head(std::min<Eigen::Index>(k, want + b));
    if (!full && !settled) continue;

    // Residual check on the wanted Ritz pairs.
    const Eigen::MatrixXd y = space.columns() * rr.eigenvectors().leftCols(want);
    const Eigen::MatrixXd ay = a * y;
    const Eigen::MatrixXd my = m * y;
    Eigen::VectorXd res(want);
    std::vector<int> unconverged;
    for (int i = 0; i < want; ++i) {
      const double r = (ay.col(i) - theta[i] * my.col(i)).norm();
      const double mnorm = std::sqrt(y.col(i).dot(my.col(i)));
      res[i] = r / ((1.0 + std::abs(theta[i])) * mnorm);
      best[i] = std::min(best[i], res[i]);
      if (res[i] > opts.tol) unconverged.push_back(i);
    }

    bool complete = false;
    if (unconverged.empty()) {
      // Every eigenvalue below the last wanted cluster must have been found,
      // and the cluster must hold enough copies to complete the count.
      const double lam = theta[want - 1];
      const double delta = 1e-6 * (1.0 + std::abs(lam));
      auto inertia_count = [&](double sigma, double step) {
        for (int attempt = 0; attempt < 4; ++attempt, sigma += step) {
          try {
            return std::pair{count_below(a, m, sigma), sigma};
          } catch (const ResonanceError&) {
          }
        }
        return std::pair{-1, sigma};
      };
      const auto [lo_count, lo] = inertia_count(lam - delta, -delta);
      const auto [hi_count, hi] = inertia_count(lam + delta, delta);
      int ritz_lo = 0;
      for (Eigen::Index i = 0; i < k; ++i)
        if (theta[i] < lo) ++ritz_lo;
      complete = lo_count >= 0 && lo_count == ritz_lo && hi_count >= want;
      if (complete) {
        EigenPairs out;
        out.values = theta.head(want);
        out.vectors = y;
        normalize_signs(out.vectors);
        out.residuals = res.cwiseProduct((Eigen::VectorXd::Ones(want) + theta.head(want).cwiseAbs()));
        out.restarts = restarts;
        return out;
      }
    }

    if (restarts >= opts.max_iter) {
      std::ostringstream msg;
      msg << "eigensolver did not converge in " << opts.max_iter << " restarts (worst residual "
          << best.maxCoeff() << ")";
      throw EigenSolverError(msg.str(), best);
    }
    ++restarts;

    // Thick restart: keep the leading Ritz vectors, continue from the unconverged ones.
    const Eigen::Index keep = std::min<Eigen::Index>(k - b, want + b);
    space.compress(rr.eigenvectors().leftCols(keep), theta.head(keep));
    previous.resize(0);
    std::vector<Eigen::Index> next;
    for (int i : unconverged)
      if (static_cast<int>(next.size()) < b) next.push_back(i);
    for (Eigen::Index i = want; i < keep && static_cast<int>(next.size()) < b; ++i) next.push_back(i);
    Eigen::MatrixXd seed(n, static_cast<Eigen::Index>(next.size()));
    for (std::size_t j = 0; j < next.size(); ++j) seed.col(j) = space.basis().col(next[j]);
    Eigen::MatrixXd w = apply_t(seed);
    if (!complete && unconverged.empty()) w = space.random_block(b);
    range = space.append(w);
  }
}

}  // namespace hqo
