#include "hqo/space.hpp"

#include <cmath>

#include "hqo/quadrature.hpp"

namespace hqo {

ElementFamily ElementFamily::lagrange(int p) {
  if (p != 1 && p != 2) throw std::invalid_argument("Lagrange order must be 1 or 2");
  return {Kind::Lagrange, p};
}

std::string ElementFamily::name() const {
  if (is_cr()) return "CR";
  return order == 2 ? "P2" : "P1";
}

DofSpace::DofSpace(std::shared_ptr<const Mesh> mesh, ElementFamily family)
    : mesh_(std::move(mesh)), family_(family), local_size_(family.local_size()) {
  if (!mesh_) throw std::invalid_argument("DofSpace needs a mesh");
  const Mesh& m = *mesh_;
  const int nv = m.num_vertices();
  const int ne = m.num_edges();
  const int nt = m.num_triangles();

  std::vector<char> constrained;
  auto edge_dirichlet = [&](int e) { return m.edge_tag(e) == BoundaryTag::Dirichlet; };

  if (family_.is_cr()) {
    locations_.resize(static_cast<std::size_t>(ne));
    constrained.assign(static_cast<std::size_t>(ne), 0);
    for (int e = 0; e < ne; ++e) {
      const auto& ed = m.edge(e);
      locations_[e] = 0.5 * (m.vertex(ed[0]) + m.vertex(ed[1]));
      constrained[e] = edge_dirichlet(e);
    }
    dofs_.resize(static_cast<std::size_t>(nt) * 3);
    for (int t = 0; t < nt; ++t)
      for (int i = 0; i < 3; ++i) dofs_[3 * t + i] = m.triangle_edges(t)[i];
  } else {
    const bool quadratic = family_.order == 2;
    const int n = quadratic ? nv + ne : nv;
    locations_.assign(m.vertices().begin(), m.vertices().end());
    constrained.assign(static_cast<std::size_t>(n), 0);
    if (quadratic) {
      locations_.reserve(static_cast<std::size_t>(n));
      for (int e = 0; e < ne; ++e) {
        const auto& ed = m.edge(e);
        locations_.push_back(0.5 * (m.vertex(ed[0]) + m.vertex(ed[1])));
      }
    }
    for (int e = 0; e < ne; ++e) {
      if (!edge_dirichlet(e)) continue;
      constrained[m.edge(e)[0]] = 1;
      constrained[m.edge(e)[1]] = 1;
      if (quadratic) constrained[nv + e] = 1;
    }
    dofs_.resize(static_cast<std::size_t>(nt) * local_size_);
    for (int t = 0; t < nt; ++t) {
      int* d = dofs_.data() + static_cast<std::size_t>(t) * local_size_;
      for (int i = 0; i < 3; ++i) d[i] = m.triangle(t)[i];
      if (quadratic)
        for (int i = 0; i < 3; ++i) d[3 + i] = nv + m.triangle_edges(t)[i];
    }
  }

  free_index_.assign(constrained.size(), -1);
  for (std::size_t i = 0; i < constrained.size(); ++i) {
    if (constrained[i]) {
      constrained_.push_back(static_cast<int>(i));
    } else {
      free_index_[i] = static_cast<int>(free_.size());
      free_.push_back(static_cast<int>(i));
    }
  }
}

SpacePtr build_space(std::shared_ptr<const Mesh> mesh, ElementFamily family) {
  return std::make_shared<const DofSpace>(std::move(mesh), family);
}

SpacePtr build_space(const Mesh& mesh, ElementFamily family) {
  return build_space(std::make_shared<const Mesh>(mesh), family);
}

// Shape functions -----------------------------------------------------------------

Eigen::VectorXd shape_values(ElementFamily family, const Eigen::Vector3d& l) {
  if (family.is_cr()) return Eigen::Vector3d::Ones() - 2.0 * l;
  if (family.order == 1) return l;
  Eigen::VectorXd v(6);
  for (int i = 0; i < 3; ++i) {
    v[i] = l[i] * (2.0 * l[i] - 1.0);
    v[3 + i] = 4.0 * l[(i + 1) % 3] * l[(i + 2) % 3];
  }
  return v;
}

Eigen::Matrix<double, 2, Eigen::Dynamic> shape_gradients(ElementFamily family,
                                                         const Eigen::Vector3d& l,
                                                         const Eigen::Matrix<double, 2, 3>& g) {
  if (family.is_cr()) return -2.0 * g;
  if (family.order == 1) return g;
  Eigen::Matrix<double, 2, Eigen::Dynamic> out(2, 6);
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3, k = (i + 2) % 3;
    out.col(i) = (4.0 * l[i] - 1.0) * g.col(i);
    out.col(3 + i) = 4.0 * (l[k] * g.col(j) + l[j] * g.col(k));
  }
  return out;
}

Eigen::VectorXd shape_laplacians(ElementFamily family, const Eigen::Matrix<double, 2, 3>& g) {
  if (family.order == 1 || family.is_cr()) return Eigen::VectorXd::Zero(3);
  Eigen::VectorXd out(6);
  for (int i = 0; i < 3; ++i) {
    out[i] = 4.0 * g.col(i).squaredNorm();
    out[3 + i] = 8.0 * g.col((i + 1) % 3).dot(g.col((i + 2) % 3));
  }
  return out;
}

namespace {

void check_element(const Eigen::Matrix<double, 2, 3>& x) {
  const double area = triangle_area(x);
  const double scale = (x.col(1) - x.col(0)).squaredNorm() + (x.col(2) - x.col(0)).squaredNorm();
  if (!(area > 1e-14 * scale)) throw AssemblyError("degenerate triangle in assembly");
}

Eigen::MatrixXd p2_stiffness(const Eigen::Matrix<double, 2, 3>& x) {
  const auto g = barycentric_gradients(x);
  const double area = triangle_area(x);
  const auto& q = QuadratureRule::of_degree(2);
  const ElementFamily p2 = ElementFamily::lagrange(2);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(6, 6);
  for (int p = 0; p < q.size(); ++p) {
    const auto grads = shape_gradients(p2, q.points.row(p).transpose(), g);
    k.noalias() += (q.weights[p] * area) * (grads.transpose() * grads);
  }
  return k;
}

Eigen::MatrixXd p2_mass(const Eigen::Matrix<double, 2, 3>& x) {
  const double area = triangle_area(x);
  const auto& q = QuadratureRule::of_degree(4);
  const ElementFamily p2 = ElementFamily::lagrange(2);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(6, 6);
  for (int p = 0; p < q.size(); ++p) {
    const Eigen::VectorXd v = shape_values(p2, q.points.row(p).transpose());
    m.noalias() += (q.weights[p] * area) * (v * v.transpose());
  }
  return m;
}

}  // namespace

Eigen::MatrixXd local_stiffness(ElementFamily family, const Eigen::Matrix<double, 2, 3>& x) {
  check_element(x);
  if (family.is_cr()) return cr_stiffness(x);
  if (family.order == 1) return p1_stiffness(x);
  return p2_stiffness(x);
}

Eigen::MatrixXd local_mass(ElementFamily family, const Eigen::Matrix<double, 2, 3>& x) {
  check_element(x);
  if (family.is_cr()) return cr_mass(x);
  if (family.order == 1) return p1_mass(x);
  return p2_mass(x);
}

// Functions -----------------------------------------------------------------------

FeFunction::FeFunction(SpacePtr s, Eigen::VectorXd c)
    : space(std::move(s)), coefficients(std::move(c)) {
  if (!space) throw std::invalid_argument("FeFunction needs a space");
  if (coefficients.size() != space->dof_count())
    throw std::invalid_argument("coefficient vector length does not match the space");
}

double FeFunction::value(int t, const Eigen::Vector3d& bary) const {
  const auto dofs = space->element_dofs(t);
  const Eigen::VectorXd phi = shape_values(space->family(), bary);
  double v = 0.0;
  for (std::size_t i = 0; i < dofs.size(); ++i) v += coefficients[dofs[i]] * phi[i];
  return v;
}

Eigen::Vector2d FeFunction::gradient(int t, const Eigen::Vector3d& bary) const {
  const auto dofs = space->element_dofs(t);
  const auto g = barycentric_gradients(corners(space->mesh(), t));
  const auto grads = shape_gradients(space->family(), bary, g);
  Eigen::Vector2d out = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < dofs.size(); ++i) out += coefficients[dofs[i]] * grads.col(i);
  return out;
}

FeFunction interpolate(const SpacePtr& space, const ScalarField& f) {
  Eigen::VectorXd c(space->dof_count());
  for (int i = 0; i < space->dof_count(); ++i)
    c[i] = space->is_constrained(i) ? 0.0 : f(space->dof_location(i));
  return FeFunction(space, std::move(c));
}

// Assembly ------------------------------------------------------------------------

namespace {

template <typename Local>
SparseSymMatrix assemble(const DofSpace& space, Local&& local) {
  const Mesh& m = space.mesh();
  const int n = space.local_size();
  std::vector<Eigen::Triplet<double, int>> triplets;
  triplets.reserve(static_cast<std::size_t>(m.num_triangles()) * n * n);
  for (int t = 0; t < m.num_triangles(); ++t) {
    const Eigen::MatrixXd k = local(space.family(), corners(m, t));
    const auto dofs = space.element_dofs(t);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (k(i, j) != 0.0) triplets.emplace_back(dofs[i], dofs[j], k(i, j));
  }
  SparseSymMatrix a(space.dof_count(), space.dof_count());
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();
  return a;
}

}  // namespace

SparseSymMatrix assemble_stiffness(const DofSpace& space) {
  return assemble(space, local_stiffness);
}

SparseSymMatrix assemble_mass(const DofSpace& space) { return assemble(space, local_mass); }

Eigen::VectorXd assemble_load(const DofSpace& space, const ScalarField& f, int degree) {
  const Mesh& m = space.mesh();
  const auto& q = QuadratureRule::of_degree(degree + space.family().order);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(space.dof_count());
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto x = corners(m, t);
    check_element(x);
    const double area = triangle_area(x);
    const auto dofs = space.element_dofs(t);
    for (int p = 0; p < q.size(); ++p) {
      const Eigen::Vector3d l = q.points.row(p).transpose();
      const double w = q.weights[p] * area * f(x * l);
      const Eigen::VectorXd phi = shape_values(space.family(), l);
      for (std::size_t i = 0; i < dofs.size(); ++i) b[dofs[i]] += w * phi[i];
    }
  }
  return b;
}

SparseSymMatrix constrain(const DofSpace& space, const SparseSymMatrix& a) {
  if (a.rows() != space.dof_count() || a.cols() != space.dof_count())
    throw std::invalid_argument("matrix size does not match the space");
  std::vector<Eigen::Triplet<double, int>> triplets;
  triplets.reserve(static_cast<std::size_t>(a.nonZeros()));
  for (int col = 0; col < a.outerSize(); ++col) {
    const int fc = space.free_index(col);
    if (fc < 0) continue;
    for (SparseSymMatrix::InnerIterator it(a, col); it; ++it) {
      const int fr = space.free_index(static_cast<int>(it.row()));
      if (fr >= 0) triplets.emplace_back(fr, fc, it.value());
    }
  }
  SparseSymMatrix out(space.free_count(), space.free_count());
  out.setFromTriplets(triplets.begin(), triplets.end());
  out.makeCompressed();
  return out;
}

Eigen::VectorXd restrict_to_free(const DofSpace& space, const Eigen::VectorXd& full) {
  if (full.size() != space.dof_count())
    throw std::invalid_argument("vector length does not match the space");
  Eigen::VectorXd out(space.free_count());
  for (int i = 0; i < space.free_count(); ++i) out[i] = full[space.free_dofs()[i]];
  return out;
}

Eigen::VectorXd extend_from_free(const DofSpace& space, const Eigen::VectorXd& free) {
  if (free.size() != space.free_count())
    throw std::invalid_argument("vector length does not match the free DOFs");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(space.dof_count());
  for (int i = 0; i < space.free_count(); ++i) out[space.free_dofs()[i]] = free[i];
  return out;
}

// Post-processing -----------------------------------------------------------------

Eigen::VectorXd vertex_average(const Mesh& mesh,
                               const Eigen::Matrix<double, Eigen::Dynamic, 3>& corner_values) {
  if (corner_values.rows() != mesh.num_triangles())
    throw std::invalid_argument("one row of corner values per triangle expected");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(mesh.num_vertices());
  Eigen::VectorXd count = Eigen::VectorXd::Zero(mesh.num_vertices());
  for (int t = 0; t < mesh.num_triangles(); ++t)
    for (int i = 0; i < 3; ++i) {
      sum[mesh.triangle(t)[i]] += corner_values(t, i);
      count[mesh.triangle(t)[i]] += 1.0;
    }
  return sum.cwiseQuotient(count);
}

FeFunction cr_to_p1_average(const FeFunction& u, SpacePtr p1) {
  if (!u.space->family().is_cr())
    throw std::invalid_argument("averaging expects a Crouzeix-Raviart function");
  const Mesh& m = u.space->mesh();
  if (!p1) p1 = build_space(u.space->mesh_ptr(), ElementFamily::lagrange(1));
  if (p1->family() != ElementFamily::lagrange(1) ||
      (p1->mesh_ptr() != u.space->mesh_ptr() && !(p1->mesh() == m)))
    throw std::invalid_argument("target must be a P1 space on the same mesh");

  // At vertex i the CR basis functions take the values -1 (own edge) and 1 (the others).
  Eigen::Matrix<double, Eigen::Dynamic, 3> corner(m.num_triangles(), 3);
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto dofs = u.space->element_dofs(t);
    const double c0 = u.coefficients[dofs[0]], c1 = u.coefficients[dofs[1]],
                 c2 = u.coefficients[dofs[2]];
    const double s = c0 + c1 + c2;
    corner(t, 0) = s - 2.0 * c0;
    corner(t, 1) = s - 2.0 * c1;
    corner(t, 2) = s - 2.0 * c2;
  }
  Eigen::VectorXd v = vertex_average(m, corner);
  for (int d : p1->constrained_dofs()) v[d] = 0.0;
  return FeFunction(std::move(p1), std::move(v));
}

double rayleigh_quotient(const Eigen::VectorXd& u, const SparseSymMatrix& a,
                         const SparseSymMatrix& m) {
  if (a.rows() != u.size() || m.rows() != u.size())
    throw std::invalid_argument("Rayleigh quotient dimension mismatch");
  const double den = u.dot(m * u);
  if (!(den > 0.0)) throw std::invalid_argument("Rayleigh quotient of a function with zero mass norm");
  return u.dot(a * u) / den;
}

double rayleigh_quotient(const FeFunction& u, const SparseSymMatrix& a, const SparseSymMatrix& m) {
  if (a.rows() == u.space->free_count())
    return rayleigh_quotient(restrict_to_free(*u.space, u.coefficients), a, m);
  return rayleigh_quotient(u.coefficients, a, m);
}

double l2_norm(const FeFunction& u, int degree) {
  return l2_error(u, [](const Point&) { return 0.0; }, degree);
}

double l2_error(const FeFunction& u, const ScalarField& reference, int degree) {
  const Mesh& m = u.space->mesh();
  const auto& q = QuadratureRule::of_degree(degree);
  double sum = 0.0;
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto x = corners(m, t);
    const double area = triangle_area(x);
    for (int p = 0; p < q.size(); ++p) {
      const Eigen::Vector3d l = q.points.row(p).transpose();
      const double d = u.value(t, l) - reference(x * l);
      sum += q.weights[p] * area * d * d;
    }
  }
  return std::sqrt(sum);
}

double l2_error(const FeFunction& u, const FeFunction& reference, int degree) {
  const Mesh& coarse = u.space->mesh();
  const Mesh& fine = reference.space->mesh();
  const long nc = coarse.num_triangles();
  const long nf = fine.num_triangles();
  long ratio = 1;
  while (nc * ratio < nf) ratio *= 4;
  if (nc * ratio != nf) throw std::invalid_argument("meshes are not nested");

  const auto& q = QuadratureRule::of_degree(degree);
  double sum = 0.0;
  int parent_cached = -1;
  Eigen::Matrix2d inv;
  Eigen::Vector2d origin;
  for (int t = 0; t < fine.num_triangles(); ++t) {
    const int parent = static_cast<int>(t / ratio);
    if (parent != parent_cached) {
      const auto xc = corners(coarse, parent);
      Eigen::Matrix2d jac;
      jac.col(0) = xc.col(1) - xc.col(0);
      jac.col(1) = xc.col(2) - xc.col(0);
      inv = jac.inverse();
      origin = xc.col(0);
      parent_cached = parent;
    }
    const auto x = corners(fine, t);
    const double area = triangle_area(x);
    auto bary_in_parent = [&](const Point& p) {
      const Eigen::Vector2d r = inv * (p - origin);
      return Eigen::Vector3d(1.0 - r.x() - r.y(), r.x(), r.y());
    };
    if (bary_in_parent(x.rowwise().mean()).minCoeff() < -1e-10)
      throw std::invalid_argument("meshes are not nested");
    for (int p = 0; p < q.size(); ++p) {
      const Eigen::Vector3d l = q.points.row(p).transpose();
      const double d = u.value(parent, bary_in_parent(x * l)) - reference.value(t, l);
      sum += q.weights[p] * area * d * d;
    }
  }
  return std::sqrt(sum);
}

}  // namespace hqo
