#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "hqo/spectral.hpp"
#include "oracles.hpp"

using namespace hqo;
using std::numbers::pi;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::shared_ptr<const Mesh> square(int n) { return std::make_shared<const Mesh>(build_unit_square(n)); }

}  // namespace

TEST_CASE("criterion on hand ladders") {
  const auto ladder = vec({19.7, 49.3, 49.3, 79.0, 98.7, 98.7, 128.3});
  auto c = check_criterion(ladder, 100, 6);
  CHECK(c.satisfied);
  CHECK(c.lambda_lo == 98.7);
  CHECK(c.lambda_hi == 128.3);
  auto over = ladder;
  over[5] = 101;
  CHECK_FALSE(check_criterion(over, 100, 6).satisfied);
  const auto coercive = check_criterion(vec({19.7, 49.3}), 10, 0);
  CHECK(coercive.satisfied);
  CHECK(coercive.lambda_lo == 0.0);
  CHECK(coercive.alpha_star == doctest::Approx((19.7 - 10) / 20.7));
  CHECK_THROWS_AS(check_criterion(ladder, 100, 7), std::invalid_argument);
}

TEST_CASE("T-coercivity constant") {
  CHECK(th_coercivity_constant(vec({19.7, 128.3}), 100) ==
        doctest::Approx(std::min((100 - 19.7) / 20.7, (128.3 - 100) / 129.3)));
  CHECK(th_coercivity_constant(vec({19.7, 128.3}), 100) == doctest::Approx(0.2189).epsilon(1e-3));
  // Symmetric about k2: the larger eigenvalue has the larger denominator.
  const double a = th_coercivity_constant(vec({90, 110}), 100);
  CHECK(a == doctest::Approx(10.0 / 111));
  double prev = 1.0;
  for (double eps : {1e-1, 1e-3, 1e-6}) {
    const double v = th_coercivity_constant(vec({100 - eps, 200}), 100);
    CHECK(v < prev);
    prev = v;
  }
  CHECK(prev < 1e-7);
  CHECK_THROWS_AS(th_coercivity_constant(vec({100, 200}), 100), std::domain_error);
}

TEST_CASE("lower bound formula and separation") {
  CHECK(cr_lower_bound(19.8, 0.1) == doctest::Approx(19.6547).epsilon(1e-5));
  CHECK(cr_lower_bound(19.8, 1e-9) == doctest::Approx(19.8));
  CHECK(cr_lower_bound(0.0, 0.3) == 0.0);
  const double t = (std::sqrt(2.0) - 1) / (0.1932 * std::sqrt(2 * pi * pi));
  CHECK(t == doctest::Approx(0.4825).epsilon(1e-3));
  CHECK(separation_ok(t * 0.999, 1, 2 * pi * pi));
  CHECK_FALSE(separation_ok(t * 1.001, 1, 2 * pi * pi));
  for (int j = 1; j < 100; ++j) CHECK(separation_ok(0.0, j, 50.0));
  int first_false = 0;
  for (int j = 1; j < 10000 && first_false == 0; ++j)
    if (!separation_ok(0.05, j, 50.0)) first_false = j;
  CHECK(first_false > 0);
  CHECK_FALSE(lower_bound_threshold(400, 0.5).has_value());
  CHECK(*lower_bound_threshold(400, 0.01) == doctest::Approx(400 / (1 - 0.1932 * 0.1932 * 400 * 1e-4)));
}

TEST_CASE("index estimate on synthetic bounds") {
  std::vector<BoundedEigen> b;
  for (double l : {10.0, 20.0, 30.0}) b.push_back({l, l - 0.1, l + 0.1, true});
  const auto e = estimate_index(b, 25);
  CHECK(e.j_star == 2);
  CHECK(e.certified);
  CHECK(e.gap_to_k2 == doctest::Approx(5));
  CHECK(e.enclosure_width == doctest::Approx(0.2));
  CHECK(estimate_index(b, 5).j_star == 0);
  CHECK_THROWS_AS(estimate_index(b, 40), IndexError);
  // A wide enclosure straddling k2 is not certified.
  std::vector<BoundedEigen> wide{{10, 5, 30, true}, {40, 35, 50, true}};
  CHECK_FALSE(estimate_index(wide, 12).certified);
}

TEST_CASE("eigen ladder sizes") {
  const auto ops = discretize(build_space(square(32), ElementFamily::lagrange(1)));
  CHECK(eigen_ladder(ops, 100, 3).size() == 10);
  const auto coercive = eigen_ladder(ops, 10, 3);
  CHECK(coercive.size() == 4);
  CHECK(check_criterion(coercive, 10, 0).satisfied);
  const auto coarse = discretize(build_space(square(8), ElementFamily::lagrange(1)));
  const double lam = compute_eigenpairs(coarse, 1).lambda(1);
  CHECK_THROWS_AS(eigen_ladder(coarse, lam, 3), ResonanceError);
}

TEST_CASE("CR bounds enclose the square spectrum") {
  const auto exact = oracle::square_spectrum(10);
  for (int n : {16, 32, 64}) {
    const auto mesh = square(n);
    const auto cr = discretize(build_space(mesh, ElementFamily::crouzeix_raviart()));
    const auto p1 = discretize(build_space(mesh, ElementFamily::lagrange(1)));
    const auto e = compute_eigenpairs(cr, 10);
    CHECK(e.lambda(1) < 2 * pi * pi);
    for (const auto mode : {UpperBoundMode::RayleighQuotient, UpperBoundMode::RayleighRitz}) {
      const auto b = bound_ladder(e, p1, default_kappa, mode);
      for (int j = 0; j < 10; ++j) {
        if (!b[static_cast<std::size_t>(j)].separation_ok) continue;
        CHECK(b[static_cast<std::size_t>(j)].lower <= exact[static_cast<std::size_t>(j)]);
        CHECK(b[static_cast<std::size_t>(j)].upper >= exact[static_cast<std::size_t>(j)]);
      }
      CHECK(b[0].separation_ok);
    }
    CHECK(cr_upper_bound(e.function(1), p1) >= 2 * pi * pi);
  }
}

TEST_CASE("CR upper bound of a continuous function is its own Rayleigh quotient") {
  const auto mesh = std::make_shared<const Mesh>(build_unit_square(6));
  const auto cr = discretize(build_space(mesh, ElementFamily::crouzeix_raviart()));
  const auto p1 = discretize(build_space(mesh, ElementFamily::lagrange(1)));
  const auto f = [](const Point& p) { return p.x() * (1 - p.x()) * p.y() * (1 - p.y()); };
  // A P1 function interpolated at edge midpoints is the same function in CR.
  const FeFunction u1 = interpolate(p1.space, f);
  Eigen::VectorXd crc(cr.space->dof_count());
  for (int d = 0; d < cr.space->dof_count(); ++d) {
    const auto& e = mesh->edge(d);
    crc[d] = 0.5 * (u1.coefficients[e[0]] + u1.coefficients[e[1]]);
  }
  const FeFunction ucr(cr.space, crc);
  const double expect = rayleigh_quotient(u1, assemble_stiffness(*p1.space), assemble_mass(*p1.space));
  CHECK(cr_upper_bound(ucr, p1) == doctest::Approx(expect).epsilon(1e-12));
  const FeFunction zero(cr.space, Eigen::VectorXd::Zero(cr.space->dof_count()));
  CHECK_THROWS(cr_upper_bound(zero, p1));
}

TEST_CASE("property: sign-flipped eigenbasis form is bounded below by alpha*") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1, 1);
  for (const auto fam : {ElementFamily::lagrange(1), ElementFamily::crouzeix_raviart()}) {
    const auto ops = discretize(build_space(square(8), fam));
    const Eigen::MatrixXd a(ops.stiffness), m(ops.mass);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(a, m);
    const Eigen::VectorXd lam = es.eigenvalues();
    const Eigen::MatrixXd v = es.eigenvectors();
    for (double k2 : {30.0, 75.0, 130.0, 260.0}) {
      const int i_star = static_cast<int>((lam.array() < k2).count());
      const Criterion c = check_criterion(lam, k2, i_star);
      REQUIRE(c.satisfied);
      const Eigen::MatrixXd b = a - k2 * m;
      for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd coef(lam.size());
        for (Eigen::Index i = 0; i < coef.size(); ++i) coef[i] = u(rng);
        Eigen::VectorXd flipped = coef;
        flipped.head(i_star) *= -1.0;
        const double form = (v * coef).dot(b * (v * flipped));
        const double norm = lam.dot(coef.cwiseAbs2());
        CHECK(form >= (c.alpha_star - 1e-9) * norm);
      }
    }
  }
}
