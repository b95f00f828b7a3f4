#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "hqo/estimator.hpp"
#include "hqo/mesh.hpp"
#include "hqo/space.hpp"
#include "hqo/spectral.hpp"

namespace hqo {

// Problem data ------------------------------------------------------------------

/// amplitude * exp(-width^2 |x - center|^2)
struct GaussianBump {
  double amplitude = 5e4;
  double width = 10.0;
  Point center = Point(0.3, 0.4);
};

/// amplitude * sin(i pi x) sin(j pi y)
struct SineProduct {
  int i = 1;
  int j = 1;
  double amplitude = 1.0;
};

struct CustomRhs {
  ScalarField f;
};

using RhsData = std::variant<GaussianBump, SineProduct, CustomRhs>;

ScalarField rhs_field(const RhsData& rhs);

/// Which analytic knowledge applies to the mesh a problem is posed on.
enum class Geometry { UnitSquare, SquareWithHole, Custom };

/// -Lap u - k2 u = f with the boundary tags carried by the mesh.
struct ProblemSpec {
  Geometry geometry = Geometry::Custom;
  ElementFamily family;
  double k2 = 1.0;
  RhsData rhs = GaussianBump{};

  /// Throws std::invalid_argument on k2 <= 0 or a non-positive bump width.
  void validate() const;
};

/// Unit square with every side Dirichlet, where the spectrum is known.
bool is_dirichlet_unit_square(const ProblemSpec& spec, const Mesh& mesh);

/// Number of pi^2 (i^2 + j^2), i, j >= 1, strictly below k2.
int square_eigenvalue_count(double k2);
/// Throws ResonanceError when k2 equals some pi^2 (i^2 + j^2) to 1e-12 relative.
void check_square_resonance(double k2);

// Helmholtz solve -----------------------------------------------------------------

struct HelmholtzSolution {
  FeFunction u;
  double relative_residual = 0.0;
};

/// Solves the constrained indefinite system (A - k2 M) u = b by LDL^T.
/// Throws ResonanceError when k2 is numerically a discrete eigenvalue.
HelmholtzSolution solve_helmholtz(const ProblemSpec& spec, const DiscreteOperators& ops);
HelmholtzSolution solve_helmholtz(const ProblemSpec& spec, std::shared_ptr<const Mesh> mesh);

/// Exact solution on the Dirichlet unit square as a truncated expansion in
/// the eigenfunctions 2 sin(i pi x) sin(j pi y).
class SineSeries {
 public:
  struct Options {
    int max_modes = 1024;
    double band_tol = 1e-10;  ///< coefficient norm allowed in the upper half of a trial band
    double tail_tol = 1e-8;   ///< L2 norm of the discarded tail
  };

  SineSeries(const ScalarField& f, double k2);
  SineSeries(const ScalarField& f, double k2, const Options& opts);
  /// Uses exactly `modes` modes per direction.
  static SineSeries with_modes(const ScalarField& f, double k2, int modes);

  int modes() const noexcept { return static_cast<int>(coeff_.rows()); }
  /// Coefficients u_ij of 2 sin(i pi x) sin(j pi y), 0-based (i-1, j-1).
  const Eigen::MatrixXd& coefficients() const noexcept { return coeff_; }

  double operator()(const Point& p) const;
  /// Values at the rows of `points` (n x 2).
  Eigen::VectorXd evaluate(const Eigen::Matrix<double, Eigen::Dynamic, 2>& points) const;

 private:
  SineSeries() = default;
  Eigen::MatrixXd coeff_;
};

/// u_ij for i, j <= n (0-based), f projected with tensor Gauss quadrature.
Eigen::MatrixXd sine_coefficients(const ScalarField& f, double k2, int n);

SineSeries sine_series_reference(const ScalarField& f, double k2);

double l2_error(const FeFunction& u, const SineSeries& reference, int degree = 6);

// Guaranteed mesh refinement ------------------------------------------------------

enum class RefineMode { Uniform, Adaptive };
enum class IndexSource { Oracle, CrEstimate };
enum class Marking { HalfMax, Dorfler };

struct GmrOptions {
  RefineMode refine = RefineMode::Uniform;
  IndexSource source = IndexSource::Oracle;
  int i_star = 0;  ///< known index for IndexSource::Oracle
  int extra = 3;   ///< the small integer l of the indicator and ladder
  double kappa = default_kappa;
  int max_iters = 20;
  Marking marking = Marking::HalfMax;
  double dorfler_theta = 0.5;
  IndicatorOptions indicator;
  UpperBoundMode upper = UpperBoundMode::RayleighQuotient;
  EigenSolveOptions eig;
};

struct IterationRecord {
  int iter = 0;
  int ndof = 0;
  double h = 0.0;
  /// i* (oracle) or j* (CR estimate); nullopt when no lower bound can reach k2.
  std::optional<int> i_star;
  double lambda_lo = 0.0;
  double lambda_hi = 0.0;
  double condition = 0.0;  ///< k2 - lambda_lo
  std::optional<double> enclosure;
  bool satisfied = false;
  bool certified = false;
  double eta_total = 0.0;
  double alpha_star = 0.0;
  int eigenpairs = 0;
};

/// Called after every ESTIMATE step, e.g. for progress output.
using IterationCallback = std::function<void(const IterationRecord&)>;

enum class Termination { Satisfied, Certified, Budget };

std::string to_string(Termination t);

struct CertificationReport {
  std::vector<IterationRecord> iterations;
  std::shared_ptr<const Mesh> final_mesh;
  Termination reason = Termination::Budget;
  std::vector<std::string> warnings;

  bool success() const noexcept { return reason != Termination::Budget; }
};

/// Refine-and-estimate loop. Iteration 0 estimates on the initial mesh; every
/// later iteration refines first (uniformly, or by bisection of the marked
/// elements). Stops once the criterion holds (and, for the CR estimate, the
/// index is certified) or after max_iters refinements.
CertificationReport run_gmr(const ProblemSpec& spec, std::shared_ptr<const Mesh> initial,
                            const GmrOptions& opts, const IterationCallback& progress = {});

/// iter,ndof,h,i_star,lambda_lo,lambda_hi,condition,enclosure,certified,eta_total
std::string certification_csv(const CertificationReport& report);

// Convergence studies ---------------------------------------------------------------

struct StudyRecord {
  double h = 0.0;
  int ndof = 0;
  double error = 0.0;
  double ev_i = 0.0;    ///< lambda_h^(i*), 0 when i* = 0
  double ev_ipo = 0.0;  ///< lambda_h^(i*+1)
  bool satisfied = false;
};

struct StudyOptions {
  std::optional<int> i_star;  ///< defaults to the enumeration on the square, else inertia on the finest mesh
  int error_degree = 0;       ///< quadrature degree for the error, 0 selects 2p + 4
  EigenSolveOptions eig;
};

struct StudyResult {
  int i_star = 0;
  std::string reference;  ///< "sine-series" or "nested-refinement"
  std::vector<StudyRecord> records;
};

/// Solves on the initial mesh and `refinements` successive uniform
/// refinements, measuring the L2 error against the sine series on the
/// Dirichlet square or against the solution on two further refinements.
StudyResult convergence_study(const ProblemSpec& spec, std::shared_ptr<const Mesh> initial,
                              int refinements, const StudyOptions& opts = {});

/// h,ndof,error,EV_i,EV_ipo
std::string study_csv(const StudyResult& study);

/// Least-squares slope of log(error) against log(h).
double fitted_rate(const std::vector<StudyRecord>& records);

}  // namespace hqo
