#include <cmath>
#include <numbers>
#include <sstream>

#include "hqo/certify.hpp"
#include "hqo/csv.hpp"
#include "hqo/quadrature.hpp"

namespace hqo {

using std::numbers::pi;

ScalarField rhs_field(const RhsData& rhs) {
  struct Visitor {
    ScalarField operator()(const GaussianBump& g) const {
      return [g](const Point& x) {
        return g.amplitude * std::exp(-g.width * g.width * (x - g.center).squaredNorm());
      };
    }
    ScalarField operator()(const SineProduct& s) const {
      return [s](const Point& x) {
        return s.amplitude * std::sin(s.i * pi * x.x()) * std::sin(s.j * pi * x.y());
      };
    }
    ScalarField operator()(const CustomRhs& c) const { return c.f; }
  };
  return std::visit(Visitor{}, rhs);
}

void ProblemSpec::validate() const {
  if (!(k2 > 0.0) || !std::isfinite(k2)) throw std::invalid_argument("k2 must be positive");
  if (const auto* g = std::get_if<GaussianBump>(&rhs)) {
    if (!(g->width > 0.0)) throw std::invalid_argument("bump width must be positive");
  } else if (const auto* s = std::get_if<SineProduct>(&rhs)) {
    if (s->i < 1 || s->j < 1) throw std::invalid_argument("sine modes must be positive");
  } else if (!std::get<CustomRhs>(rhs).f) {
    throw std::invalid_argument("custom right-hand side is empty");
  }
}

bool is_dirichlet_unit_square(const ProblemSpec& spec, const Mesh& mesh) {
  if (spec.geometry != Geometry::UnitSquare) return false;
  for (const auto& b : mesh.boundary_edges())
    if (b.tag != BoundaryTag::Dirichlet) return false;
  return true;
}

int square_eigenvalue_count(double k2) {
  int count = 0;
  for (int i = 1; pi * pi * (i * i + 1) < k2; ++i)
    for (int j = 1; pi * pi * (i * i + j * j) < k2; ++j) ++count;
  return count;
}

void check_square_resonance(double k2) {
  for (int i = 1; pi * pi * (i * i + 1) <= 2.0 * k2; ++i)
    for (int j = 1; pi * pi * (i * i + j * j) <= 2.0 * k2; ++j) {
      const double lam = pi * pi * (i * i + j * j);
      if (std::abs(lam - k2) <= 1e-12 * k2) {
        std::ostringstream msg;
        msg << "k2 = " << format_double(k2) << " is the Laplace eigenvalue pi^2(" << i << "^2+" << j
            << "^2) of the unit square; perturb k2";
        throw ResonanceError(msg.str());
      }
    }
}

// Helmholtz solve -------------------------------------------------------------------

HelmholtzSolution solve_helmholtz(const ProblemSpec& spec, const DiscreteOperators& ops) {
  spec.validate();
  const DofSpace& space = *ops.space;
  const Eigen::VectorXd b = restrict_to_free(space, assemble_load(space, rhs_field(spec.rhs)));
  const Factorization f = ldlt(ops.stiffness, spec.k2, ops.mass);
  if (f.inertia().zero > 0) {
    std::ostringstream msg;
    msg << "k2 = " << format_double(spec.k2)
        << " is resonant at this mesh; refine the mesh or perturb k2";
    throw ResonanceError(msg.str());
  }
  Eigen::VectorXd x = solve(f, b);
  const double bnorm = b.norm();
  double rel = 0.0;
  if (bnorm > 0.0) {
    for (int step = 0; step < 4; ++step) {
      const Eigen::VectorXd r = b - f.matrix() * x;
      rel = r.norm() / bnorm;
      if (rel <= 1e-12) break;
      x += f.apply_inverse(r);
    }
  }
  return {FeFunction(ops.space, extend_from_free(space, x)), rel};
}

HelmholtzSolution solve_helmholtz(const ProblemSpec& spec, std::shared_ptr<const Mesh> mesh) {
  return solve_helmholtz(spec, discretize(build_space(std::move(mesh), spec.family)));
}

// Sine series -------------------------------------------------------------------------

namespace {

/// Rows: sin(k pi x) for k = 1..n at the given abscissae (columns).
Eigen::MatrixXd sine_table(int n, const Eigen::VectorXd& x) {
  Eigen::MatrixXd s(n, x.size());
  for (Eigen::Index a = 0; a < x.size(); ++a)
    for (int k = 0; k < n; ++k) s(k, a) = std::sin((k + 1) * pi * x[a]);
  return s;
}

double tail_norm(const Eigen::MatrixXd& c, int from) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < c.cols(); ++j)
    for (Eigen::Index i = 0; i < c.rows(); ++i)
      if (std::max(i, j) >= from) sum += c(i, j) * c(i, j);
  return std::sqrt(sum);
}

}  // namespace

Eigen::MatrixXd sine_coefficients(const ScalarField& f, double k2, int n) {
  if (n < 1) throw std::invalid_argument("sine series needs at least one mode");
  check_square_resonance(k2);

  // Composite Gauss-Legendre grid fine enough for the highest mode.
  const int panels = n / 4 + 4;
  const LineRule g = gauss_legendre(10);
  const Eigen::Index q = panels * g.points.size();
  Eigen::VectorXd x(q), w(q);
  for (int p = 0; p < panels; ++p)
    for (Eigen::Index k = 0; k < g.points.size(); ++k) {
      x[p * g.points.size() + k] = (p + g.points[k]) / panels;
      w[p * g.points.size() + k] = g.weights[k] / panels;
    }
  Eigen::MatrixXd values(q, q);
  for (Eigen::Index b = 0; b < q; ++b)
    for (Eigen::Index a = 0; a < q; ++a) values(a, b) = f(Point(x[a], x[b]));

  const Eigen::MatrixXd sw = sine_table(n, x) * w.asDiagonal();
  Eigen::MatrixXd c = 2.0 * (sw * values * sw.transpose());
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) c(i, j) /= pi * pi * ((i + 1) * (i + 1) + (j + 1) * (j + 1)) - k2;
  return c;
}

SineSeries::SineSeries(const ScalarField& f, double k2) : SineSeries(f, k2, Options{}) {}

SineSeries::SineSeries(const ScalarField& f, double k2, const Options& opts) {
  if (!(k2 > 0.0)) throw std::invalid_argument("k2 must be positive");
  check_square_resonance(k2);
  int trial = std::min(32, opts.max_modes);
  Eigen::MatrixXd c;
  while (true) {
    c = sine_coefficients(f, k2, trial);
    if (tail_norm(c, trial / 2) < opts.band_tol || trial >= opts.max_modes) break;
    trial = std::min(2 * trial, opts.max_modes);
  }
  int n = 1;
  while (n < trial && tail_norm(c, n) >= opts.tail_tol) ++n;
  coeff_ = c.topLeftCorner(n, n);
}

SineSeries SineSeries::with_modes(const ScalarField& f, double k2, int modes) {
  SineSeries s;
  s.coeff_ = sine_coefficients(f, k2, modes);
  return s;
}

SineSeries sine_series_reference(const ScalarField& f, double k2) { return SineSeries(f, k2); }

Eigen::VectorXd SineSeries::evaluate(const Eigen::Matrix<double, Eigen::Dynamic, 2>& points) const {
  const int n = modes();
  const Eigen::Index np = points.rows();
  Eigen::MatrixXd sx(np, n), sy(np, n);
  auto fill = [n](Eigen::MatrixXd& s, Eigen::Index row, double t) {
    const double s1 = std::sin(pi * t);
    const double c2 = 2.0 * std::cos(pi * t);
    double prev = 0.0, cur = s1;
    for (int k = 0; k < n; ++k) {
      s(row, k) = cur;
      const double next = c2 * cur - prev;
      prev = cur;
      cur = next;
    }
  };
  for (Eigen::Index r = 0; r < np; ++r) {
    fill(sx, r, points(r, 0));
    fill(sy, r, points(r, 1));
  }
  return 2.0 * ((sx * coeff_).cwiseProduct(sy)).rowwise().sum();
}

double SineSeries::operator()(const Point& p) const {
  Eigen::Matrix<double, 1, 2> row(p.x(), p.y());
  return evaluate(row)[0];
}

double l2_error(const FeFunction& u, const SineSeries& reference, int degree) {
  const Mesh& m = u.space->mesh();
  const auto& q = QuadratureRule::of_degree(degree);
  const Eigen::Index nq = q.size();
  const int chunk = std::max<int>(1, static_cast<int>(8192 / nq));
  double sum = 0.0;
  Eigen::Matrix<double, Eigen::Dynamic, 2> pts;
  Eigen::VectorXd fe, wts;
  for (int t0 = 0; t0 < m.num_triangles(); t0 += chunk) {
    const int t1 = std::min(m.num_triangles(), t0 + chunk);
    const Eigen::Index np = static_cast<Eigen::Index>(t1 - t0) * nq;
    pts.resize(np, 2);
    fe.resize(np);
    wts.resize(np);
    for (int t = t0; t < t1; ++t) {
      const auto x = corners(m, t);
      const double area = triangle_area(x);
      for (Eigen::Index p = 0; p < nq; ++p) {
        const Eigen::Vector3d l = q.points.row(p).transpose();
        const Eigen::Index r = static_cast<Eigen::Index>(t - t0) * nq + p;
        pts.row(r) = (x * l).transpose();
        fe[r] = u.value(t, l);
        wts[r] = q.weights[p] * area;
      }
    }
    const Eigen::VectorXd d = fe - reference.evaluate(pts);
    sum += wts.dot(d.cwiseAbs2());
  }
  return std::sqrt(sum);
}

}  // namespace hqo
