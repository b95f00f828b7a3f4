#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hqo/certify.hpp"
#include "hqo/csv.hpp"
#include "oracles.hpp"

using namespace hqo;
using std::numbers::pi;

namespace {

std::shared_ptr<const Mesh> square(int n) { return std::make_shared<const Mesh>(build_unit_square(n)); }

ProblemSpec square_problem(double k2, RhsData rhs = GaussianBump{}, ElementFamily fam = ElementFamily::lagrange(1)) {
  ProblemSpec s;
  s.geometry = Geometry::UnitSquare;
  s.family = fam;
  s.k2 = k2;
  s.rhs = std::move(rhs);
  return s;
}

double sinsin(const Point& p) { return std::sin(pi * p.x()) * std::sin(pi * p.y()); }

}  // namespace

TEST_CASE("problem validation") {
  CHECK_THROWS_AS(square_problem(0.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(square_problem(-1.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(square_problem(1.0, GaussianBump{1.0, 0.0, Point(0, 0)}).validate(), std::invalid_argument);
  CHECK_NOTHROW(square_problem(100.0).validate());
}

TEST_CASE("enumeration of the square spectrum") {
  for (double k2 : {10.0, 100.0, 144.0, 225.0, 239.63, 400.0, 1000.0})
    CHECK(square_eigenvalue_count(k2) == oracle::square_count_below(k2));
  CHECK(square_eigenvalue_count(100) == 6);
  CHECK(square_eigenvalue_count(144) == 8);
  CHECK(square_eigenvalue_count(225) == 13);
  CHECK(square_eigenvalue_count(400) == 26);
  CHECK(square_eigenvalue_count(239.63) == 13);
  CHECK_THROWS_AS(check_square_resonance(5 * pi * pi), ResonanceError);
  CHECK_NOTHROW(check_square_resonance(5 * pi * pi + 1e-6));
}

TEST_CASE("Helmholtz solve: zero data, manufactured and eigen-expansion solutions") {
  const auto zero = solve_helmholtz(square_problem(100, CustomRhs{[](const Point&) { return 0.0; }}), square(8));
  CHECK(zero.u.coefficients.norm() == 0.0);

  const double k2 = 100;
  std::vector<double> lh, le;
  for (int n : {16, 32, 64, 128}) {
    const auto mesh = square(n);
    const auto sol = solve_helmholtz(square_problem(k2, SineProduct{1, 1, 2 * pi * pi - k2}), mesh);
    CHECK(sol.relative_residual < 1e-10);
    lh.push_back(std::log(global_mesh_size(*mesh)));
    le.push_back(std::log(l2_error(sol.u, sinsin)));
  }
  // kh < 1 from n = 16 on; coarser meshes are pre-asymptotic at k = 10.
  CHECK(oracle::slope(lh, le) == doctest::Approx(2.0).epsilon(0.1));

  const auto u = solve_helmholtz(square_problem(k2, SineProduct{1, 1, 1.0}), square(64)).u;
  const double c = 1.0 / (2 * pi * pi - k2);
  CHECK(l2_error(u, [&](const Point& p) { return c * sinsin(p); }) < 1e-3 * std::abs(c) * 0.5);
}

TEST_CASE("Helmholtz solve rejects discrete resonance") {
  const auto mesh = square(4);
  const auto ops = discretize(build_space(mesh, ElementFamily::lagrange(1)));
  const double lam = compute_eigenpairs(ops, 1).lambda(1);
  CHECK_THROWS_AS(solve_helmholtz(square_problem(lam), ops), ResonanceError);
}

TEST_CASE("sine series reference") {
  const double k2 = 100;
  const SineSeries single(
      [](const Point& p) { return 2 * std::sin(pi * p.x()) * std::sin(pi * p.y()); }, k2);
  for (const Point p : {Point(0.3, 0.4), Point(0.5, 0.5), Point(0.9, 0.1)})
    CHECK(single(p) == doctest::Approx(2 * sinsin(p) / (2 * pi * pi - k2)).epsilon(1e-10));

  const auto high = SineSeries::with_modes(
      [](const Point& p) { return std::sin(40 * pi * p.x()) * std::sin(40 * pi * p.y()); }, k2, 8);
  CHECK(high.coefficients().cwiseAbs().maxCoeff() < 1e-8);

  const ScalarField bump = rhs_field(GaussianBump{});
  const SineSeries ref(bump, k2);
  const auto more = SineSeries::with_modes(bump, k2, ref.modes() + 16);
  Eigen::Matrix<double, Eigen::Dynamic, 2> pts(50, 2);
  for (int i = 0; i < 50; ++i) pts.row(i) << (i % 7 + 0.5) / 7.0, (i / 7 + 0.5) / 8.0;
  const double scale = more.evaluate(pts).cwiseAbs().maxCoeff();
  CHECK((ref.evaluate(pts) - more.evaluate(pts)).cwiseAbs().maxCoeff() < 1e-8 * std::max(1.0, scale));
  CHECK_THROWS_AS(SineSeries(bump, 2 * pi * pi), ResonanceError);
}

TEST_CASE("run_gmr with a known index on the square") {
  GmrOptions o;
  o.i_star = 6;
  const auto report = run_gmr(square_problem(100), square(4), o);
  CHECK(report.reason == Termination::Satisfied);
  const auto& last = report.iterations.back();
  CHECK(last.satisfied);
  CHECK(last.condition > 0);
  CHECK(last.lambda_lo < 100);
  CHECK(last.lambda_hi > 100);
  for (std::size_t i = 0; i + 1 < report.iterations.size(); ++i) CHECK_FALSE(report.iterations[i].satisfied);
  const std::string csv = certification_csv(report);
  CHECK(csv.rfind("iter,ndof,h,i_star,lambda_lo,lambda_hi,condition,enclosure,certified,eta_total\n", 0) == 0);
}

TEST_CASE("run_gmr in the coercive regime stops at once") {
  GmrOptions o;
  o.i_star = 0;
  const auto report = run_gmr(square_problem(10), square(4), o);
  CHECK(report.iterations.size() == 1);
  CHECK(report.success());
}

TEST_CASE("run_gmr budget and resonance") {
  GmrOptions o;
  o.i_star = 6;
  o.max_iters = 1;
  const auto report = run_gmr(square_problem(100), square(2), o);
  CHECK(report.reason == Termination::Budget);
  CHECK(report.iterations.size() == 2);
  CHECK_THROWS_AS(run_gmr(square_problem(2 * pi * pi), square(4), o), ResonanceError);
  GmrOptions bad;
  bad.source = IndexSource::CrEstimate;
  CHECK_THROWS_AS(run_gmr(square_problem(100), square(4), bad), std::invalid_argument);
}

TEST_CASE("enumerated index matches inertia on the certified mesh") {
  for (double k2 : {100.0, 144.0, 225.0, 400.0}) {
    GmrOptions o;
    o.i_star = oracle::square_count_below(k2);
    const auto report = run_gmr(square_problem(k2), square(4), o);
    REQUIRE(report.success());
    const auto ops = discretize(build_space(report.final_mesh, ElementFamily::lagrange(1)));
    CHECK(count_below(ops.stiffness, ops.mass, k2) == o.i_star);
  }
}

TEST_CASE("CR estimate certifies on the square") {
  GmrOptions o;
  o.source = IndexSource::CrEstimate;
  const auto report = run_gmr(square_problem(100, GaussianBump{}, ElementFamily::crouzeix_raviart()), square(4), o);
  REQUIRE(report.reason == Termination::Certified);
  const auto& last = report.iterations.back();
  REQUIRE(last.i_star.has_value());
  CHECK(*last.i_star == 6);
  CHECK(*last.enclosure < last.condition);
}

TEST_CASE("adaptive refinement on the square") {
  GmrOptions o;
  o.i_star = 6;
  o.refine = RefineMode::Adaptive;
  const auto report = run_gmr(square_problem(100), square(4), o);
  CHECK(report.success());
}

TEST_CASE("convergence study: CSV, determinism and rates") {
  const auto spec = square_problem(100);
  const auto a = convergence_study(spec, square(4), 3);
  const auto b = convergence_study(spec, square(4), 3);
  CHECK(study_csv(a) == study_csv(b));
  CHECK(a.i_star == 6);
  CHECK(a.reference == "sine-series");
  CHECK(a.records.size() == 4);
  CHECK(study_csv(a).rfind("h,ndof,error,EV_i,EV_ipo\n", 0) == 0);
  for (std::size_t i = 1; i < a.records.size(); ++i) CHECK(a.records[i].h == doctest::Approx(0.5 * a.records[i - 1].h));

  ProblemSpec hole;
  hole.geometry = Geometry::SquareWithHole;
  hole.k2 = 30;
  const auto h = convergence_study(hole, std::make_shared<const Mesh>(build_square_with_hole(2.0, 0.5, 4)), 2);
  CHECK(h.reference == "nested-refinement");
  CHECK(h.records.back().error < h.records.front().error);
}

TEST_CASE("CSV number formatting round-trips") {
  for (double x : {0.1, 1.0 / 3.0, 2 * pi * pi, 1e-300, -123456.789})
    CHECK(std::stod(format_double(x)) == x);
}
