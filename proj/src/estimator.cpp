#include "hqo/estimator.hpp"

#include <algorithm>
#include <numeric>

#include "hqo/csv.hpp"
#include "hqo/quadrature.hpp"

namespace hqo {

namespace {

int local_index(const Triangle& t, int v) {
  for (int i = 0; i < 3; ++i)
    if (t[i] == v) return i;
  return -1;
}

}  // namespace

IndicatorField residual_indicator(const EigenSet& e, int i_star, int extra,
                                  const IndicatorOptions& opts) {
  if (i_star < 1) throw std::invalid_argument("indicator needs i* >= 1");
  if (extra < 0) throw std::invalid_argument("indicator needs a nonnegative extra count");
  const int count = i_star + extra;
  if (e.size() < count) throw std::invalid_argument("not enough eigenpairs for the indicator");

  const DofSpace& space = *e.space;
  const Mesh& mesh = space.mesh();
  const ElementFamily fam = space.family();
  const int nt = mesh.num_triangles();
  const bool quadratic = fam.order == 2 && !fam.is_cr();

  // Coefficients over all DOFs, one column per eigenfunction.
  Eigen::MatrixXd coeff = Eigen::MatrixXd::Zero(space.dof_count(), count);
  for (int i = 0; i < space.free_count(); ++i)
    coeff.row(space.free_dofs()[i]) = e.free_vectors.row(i).head(count);
  const Eigen::VectorXd lambda = e.values.head(count);

  std::vector<Eigen::Matrix<double, 2, 3>> grads(static_cast<std::size_t>(nt));
  Eigen::VectorXd hk(nt), area(nt);
  for (int t = 0; t < nt; ++t) {
    const auto x = corners(mesh, t);
    grads[t] = barycentric_gradients(x);
    hk[t] = element_diameter(mesh, t);
    area[t] = triangle_area(x);
  }
  auto local_coeff = [&](int t) {
    const auto dofs = space.element_dofs(t);
    Eigen::MatrixXd c(dofs.size(), count);
    for (std::size_t i = 0; i < dofs.size(); ++i) c.row(i) = coeff.row(dofs[i]);
    return c;
  };

  Eigen::VectorXd eta = Eigen::VectorXd::Zero(nt);

  // Volume residual.
  const auto& q = QuadratureRule::of_degree(quadratic ? 4 : 2);
  for (int t = 0; t < nt; ++t) {
    const Eigen::MatrixXd c = local_coeff(t);
    const Eigen::RowVectorXd lap = shape_laplacians(fam, grads[t]).transpose() * c;
    double sum = 0.0;
    for (Eigen::Index p = 0; p < q.size(); ++p) {
      const Eigen::RowVectorXd val =
          shape_values(fam, q.points.row(p).transpose()).transpose() * c;
      const Eigen::RowVectorXd r = lap + val.cwiseProduct(lambda.transpose());
      sum += q.weights[p] * area[t] * r.squaredNorm();
    }
    eta[t] += hk[t] * hk[t] * sum;
  }

  // Normal flux jumps across interior edges (and Neumann edges on request).
  const LineRule line = gauss_legendre(quadratic ? 2 : 1);
  for (int ed = 0; ed < mesh.num_edges(); ++ed) {
    const auto& tris = mesh.edge_triangles(ed);
    const bool boundary = tris[1] < 0;
    if (boundary && !(opts.include_neumann && mesh.edge_tag(ed) == BoundaryTag::Neumann)) continue;
    const int a = mesh.edge(ed)[0], b = mesh.edge(ed)[1];
    const Eigen::Vector2d tangent = mesh.vertex(b) - mesh.vertex(a);
    const double length = tangent.norm();
    const Eigen::Vector2d normal(tangent.y() / length, -tangent.x() / length);

    auto flux = [&](int t, double s) -> Eigen::RowVectorXd {
      Eigen::Vector3d bary = Eigen::Vector3d::Zero();
      bary[local_index(mesh.triangle(t), a)] = 1.0 - s;
      bary[local_index(mesh.triangle(t), b)] = s;
      const auto g = shape_gradients(fam, bary, grads[t]);
      return (normal.transpose() * g) * local_coeff(t);
    };

    double sum = 0.0;
    for (Eigen::Index p = 0; p < line.points.size(); ++p) {
      const double s = line.points[p];
      Eigen::RowVectorXd jump = flux(tris[0], s);
      if (!boundary) jump -= flux(tris[1], s);
      sum += line.weights[p] * length * jump.squaredNorm();
    }
    for (int t : tris)
      if (t >= 0) eta[t] += 0.5 * hk[t] * sum;
  }

  IndicatorField out;
  out.values = eta / static_cast<double>(i_star);
  out.i_star = i_star;
  out.extra = extra;
  out.family = fam;
  return out;
}

std::vector<int> mark_half_max(const IndicatorField& eta) {
  std::vector<int> marked;
  if (eta.values.size() == 0) return marked;
  const double max = eta.values.maxCoeff();
  if (!(max > 0.0)) return marked;
  for (Eigen::Index t = 0; t < eta.values.size(); ++t)
    if (eta.values[t] > 0.5 * max) marked.push_back(static_cast<int>(t));
  return marked;
}

std::vector<int> mark_dorfler(const IndicatorField& eta, double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("Doerfler parameter must lie in (0, 1]");
  std::vector<int> order(static_cast<std::size_t>(eta.values.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return eta.values[x] > eta.values[y]; });
  const double goal = theta * eta.values.sum();
  std::vector<int> marked;
  double acc = 0.0;
  for (int t : order) {
    if (acc >= goal || !(eta.values[t] > 0.0)) break;
    marked.push_back(t);
    acc += eta.values[t];
  }
  std::sort(marked.begin(), marked.end());
  return marked;
}

std::string indicator_csv(const IndicatorField& eta) {
  CsvTable table{"element_id", "eta"};
  for (Eigen::Index t = 0; t < eta.values.size(); ++t) {
    table.cell(static_cast<long long>(t)).cell(eta.values[t]);
    table.end_row();
  }
  return table.str();
}

}  // namespace hqo
