#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "hqo/mesh.hpp"
#include "hqo/sparse.hpp"

namespace hqo {

struct ElementFamily {
  enum class Kind : std::uint8_t { Lagrange, CrouzeixRaviart };

  Kind kind = Kind::Lagrange;
  int order = 1;

  /// Conforming Lagrange element of order p in {1, 2}.
  static ElementFamily lagrange(int p);
  static ElementFamily crouzeix_raviart() { return {Kind::CrouzeixRaviart, 1}; }

  bool is_cr() const noexcept { return kind == Kind::CrouzeixRaviart; }
  int local_size() const noexcept { return (kind == Kind::Lagrange && order == 2) ? 6 : 3; }
  /// "P1", "P2" or "CR".
  std::string name() const;

  friend bool operator==(const ElementFamily&, const ElementFamily&) = default;
};

class AssemblyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Degrees of freedom of a finite element space on a mesh.
///
/// Lagrange DOFs live on vertices (and on edges for p = 2, numbered after the
/// vertices); Crouzeix-Raviart DOFs live on edge midpoints. A DOF is
/// constrained when its location lies on a Dirichlet-tagged boundary edge.
/// Local numbering: vertex i, then edge i (opposite vertex i).
class DofSpace {
 public:
  DofSpace(std::shared_ptr<const Mesh> mesh, ElementFamily family);

  const Mesh& mesh() const noexcept { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const noexcept { return mesh_; }
  ElementFamily family() const noexcept { return family_; }

  int dof_count() const noexcept { return static_cast<int>(locations_.size()); }
  int local_size() const noexcept { return local_size_; }
  std::span<const int> element_dofs(int t) const {
    return {dofs_.data() + static_cast<std::size_t>(t) * local_size_,
            static_cast<std::size_t>(local_size_)};
  }

  const std::vector<int>& free_dofs() const noexcept { return free_; }
  const std::vector<int>& constrained_dofs() const noexcept { return constrained_; }
  int free_count() const noexcept { return static_cast<int>(free_.size()); }
  /// Position of `dof` among the free DOFs, or -1 when constrained.
  int free_index(int dof) const { return free_index_[static_cast<std::size_t>(dof)]; }
  bool is_constrained(int dof) const { return free_index(dof) < 0; }
  const Point& dof_location(int dof) const { return locations_[static_cast<std::size_t>(dof)]; }

 private:
  std::shared_ptr<const Mesh> mesh_;
  ElementFamily family_;
  int local_size_;
  std::vector<int> dofs_;
  std::vector<Point> locations_;
  std::vector<int> free_;
  std::vector<int> constrained_;
  std::vector<int> free_index_;
};

using SpacePtr = std::shared_ptr<const DofSpace>;

SpacePtr build_space(std::shared_ptr<const Mesh> mesh, ElementFamily family);
SpacePtr build_space(const Mesh& mesh, ElementFamily family);

using ScalarField = std::function<double(const Point&)>;

/// Coefficient vector over all DOFs of a space.
struct FeFunction {
  FeFunction(SpacePtr space, Eigen::VectorXd coefficients);

  SpacePtr space;
  Eigen::VectorXd coefficients;

  /// Value on triangle t at barycentric coordinates `bary`.
  double value(int t, const Eigen::Vector3d& bary) const;
  /// Gradient on triangle t at barycentric coordinates `bary`.
  Eigen::Vector2d gradient(int t, const Eigen::Vector3d& bary) const;
};

/// Nodal interpolant (vertex/edge-midpoint values); constrained DOFs are zeroed.
FeFunction interpolate(const SpacePtr& space, const ScalarField& f);

// Local element matrices ---------------------------------------------------------

/// Columns are the gradients of the three barycentric coordinates.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 3> barycentric_gradients(const Eigen::Matrix<Scalar, 2, 3>& x) {
  Eigen::Matrix<Scalar, 2, 2> jac;
  jac.col(0) = x.col(1) - x.col(0);
  jac.col(1) = x.col(2) - x.col(0);
  const Eigen::Matrix<Scalar, 2, 2> inv = jac.inverse();
  Eigen::Matrix<Scalar, 2, 3> g;
  g.col(1) = inv.row(0).transpose();
  g.col(2) = inv.row(1).transpose();
  g.col(0) = -g.col(1) - g.col(2);
  return g;
}

template <typename Scalar>
Scalar triangle_area(const Eigen::Matrix<Scalar, 2, 3>& x) {
  return signed_area<Scalar>(x.col(0), x.col(1), x.col(2));
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> p1_stiffness(const Eigen::Matrix<Scalar, 2, 3>& x) {
  const auto g = barycentric_gradients(x);
  return triangle_area(x) * (g.transpose() * g);
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> p1_mass(const Eigen::Matrix<Scalar, 2, 3>& x) {
  Eigen::Matrix<Scalar, 3, 3> m = Eigen::Matrix<Scalar, 3, 3>::Constant(Scalar(1));
  m.diagonal().setConstant(Scalar(2));
  return (triangle_area(x) / Scalar(12)) * m;
}

/// CR basis 1 - 2*lambda_i, local DOF i on the edge opposite vertex i.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> cr_stiffness(const Eigen::Matrix<Scalar, 2, 3>& x) {
  return Scalar(4) * p1_stiffness(x);
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> cr_mass(const Eigen::Matrix<Scalar, 2, 3>& x) {
  return (triangle_area(x) / Scalar(3)) * Eigen::Matrix<Scalar, 3, 3>::Identity();
}

Eigen::MatrixXd local_stiffness(ElementFamily family, const Eigen::Matrix<double, 2, 3>& x);
Eigen::MatrixXd local_mass(ElementFamily family, const Eigen::Matrix<double, 2, 3>& x);

/// Shape function values at barycentric coordinates.
Eigen::VectorXd shape_values(ElementFamily family, const Eigen::Vector3d& bary);
/// Shape function gradients (2 x local_size) given barycentric gradients.
Eigen::Matrix<double, 2, Eigen::Dynamic> shape_gradients(ElementFamily family,
                                                         const Eigen::Vector3d& bary,
                                                         const Eigen::Matrix<double, 2, 3>& grad);
/// Elementwise Laplacians of the shape functions (constant on each triangle).
Eigen::VectorXd shape_laplacians(ElementFamily family, const Eigen::Matrix<double, 2, 3>& grad);

// Global assembly -------------------------------------------------------------------

SparseSymMatrix assemble_stiffness(const DofSpace& space);
SparseSymMatrix assemble_mass(const DofSpace& space);
Eigen::VectorXd assemble_load(const DofSpace& space, const ScalarField& f, int degree = 4);

/// Restriction of A to the free x free block.
SparseSymMatrix constrain(const DofSpace& space, const SparseSymMatrix& a);
Eigen::VectorXd restrict_to_free(const DofSpace& space, const Eigen::VectorXd& full);
/// Embeds free coefficients into a full vector with zeros on constrained DOFs.
Eigen::VectorXd extend_from_free(const DofSpace& space, const Eigen::VectorXd& free);

// Post-processing -------------------------------------------------------------------

/// Arithmetic mean at each vertex of a broken P1 function given by its three
/// corner values per triangle.
Eigen::VectorXd vertex_average(const Mesh& mesh,
                               const Eigen::Matrix<double, Eigen::Dynamic, 3>& corner_values);

/// Conforming P1 companion of a CR function: vertex values are the mean of
/// the adjacent elementwise limits, Dirichlet vertices are set to zero.
/// `p1` must live on the same mesh; it is built when null.
FeFunction cr_to_p1_average(const FeFunction& u, SpacePtr p1 = nullptr);

double rayleigh_quotient(const Eigen::VectorXd& u, const SparseSymMatrix& a,
                         const SparseSymMatrix& m);
double rayleigh_quotient(const FeFunction& u, const SparseSymMatrix& a, const SparseSymMatrix& m);

double l2_norm(const FeFunction& u, int degree = 6);
/// Broken L2 distance to an analytic reference.
double l2_error(const FeFunction& u, const ScalarField& reference, int degree = 6);
/// L2 distance to a function on a uniform-refinement descendant of u's mesh,
/// integrated elementwise on the finer mesh.
double l2_error(const FeFunction& u, const FeFunction& reference, int degree = 6);

}  // namespace hqo
