#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "hqo/mesh.hpp"

using namespace hqo;

namespace {

int euler(const Mesh& m) { return m.num_vertices() - m.num_edges() + m.num_triangles(); }

std::vector<int> random_marks(const Mesh& m, std::mt19937_64& rng, double p) {
  std::bernoulli_distribution pick(p);
  std::vector<int> out;
  for (int t = 0; t < m.num_triangles(); ++t)
    if (pick(rng)) out.push_back(t);
  return out;
}

}  // namespace

TEST_CASE("unit square counts") {
  const Mesh m1 = build_unit_square(1);
  CHECK(m1.num_triangles() == 2);
  CHECK(m1.num_vertices() == 4);
  CHECK(m1.boundary_edges().size() == 4);
  const Mesh m4 = build_unit_square(4);
  CHECK(m4.num_triangles() == 32);
  CHECK(m4.num_vertices() == 25);
  CHECK(euler(m4) == 1);
  CHECK_THROWS_AS(build_unit_square(0), std::invalid_argument);
}

TEST_CASE("mesh size on the structured square") {
  for (int n : {1, 2, 5, 8}) CHECK(global_mesh_size(build_unit_square(n)) == doctest::Approx(std::sqrt(2.0) / n));
  const Mesh tri({Point(0, 0), Point(1, 0), Point(0, 1)}, {Triangle{0, 1, 2}},
                 {{0, 1, BoundaryTag::Dirichlet}, {1, 2, BoundaryTag::Dirichlet}, {2, 0, BoundaryTag::Dirichlet}});
  CHECK(element_diameter(tri, 0) == doctest::Approx(std::sqrt(2.0)));
  const Mesh m2 = build_unit_square(2);
  CHECK(global_mesh_size(refine_uniform(m2)) == doctest::Approx(0.5 * global_mesh_size(m2)));
}

TEST_CASE("square with hole topology and tags") {
  const Mesh m = build_square_with_hole(2.0, 1.0, 4);
  CHECK(euler(m) == 0);
  CHECK(total_area(m) == doctest::Approx(3.0));
  const Mesh h = build_square_with_hole(2.0, 0.5, 8);
  CHECK(euler(h) == 0);
  CHECK(total_area(h) == doctest::Approx(3.75));
  CHECK_THROWS_AS(build_square_with_hole(1.0, 1.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(build_square_with_hole(1.0, 2.0, 4), std::invalid_argument);

  const Mesh mixed = build_square_with_hole(2.0, 0.5, 4, BoundaryTag::Neumann, BoundaryTag::Dirichlet);
  const Mesh fine = refine_uniform(mixed);
  for (const auto& b : fine.boundary_edges()) {
    const Point mid = 0.5 * (fine.vertex(b.a) + fine.vertex(b.b));
    const bool outer = std::abs(std::abs(mid.x()) - 1.0) < 1e-12 || std::abs(std::abs(mid.y()) - 1.0) < 1e-12;
    CHECK(b.tag == (outer ? BoundaryTag::Neumann : BoundaryTag::Dirichlet));
  }
}

TEST_CASE("uniform refinement") {
  const Mesh m = build_unit_square(1);
  const Mesh r = refine_uniform(m);
  CHECK(r.num_triangles() == 8);
  CHECK(r.num_vertices() == 9);
  CHECK(refine_uniform(r).num_triangles() == 32);
  CHECK(total_area(r) == doctest::Approx(1.0));
  // Children are numbered 4t .. 4t+3 and lie inside their parent.
  for (int t = 0; t < r.num_triangles(); ++t) {
    const auto c = corners(r, t);
    const Point centroid = c.rowwise().mean();
    const auto p = corners(m, t / 4);
    for (int i = 0; i < 3; ++i) {
      const Point a = p.col(i), b = p.col((i + 1) % 3);
      CHECK(signed_area<double>(a, b, centroid) > 0.0);
    }
  }
}

TEST_CASE("bisection: empty marking is the identity, full marking bisects all") {
  const Mesh m = build_unit_square(2);
  CHECK(refine_bisection(m, std::vector<int>{}) == m);
  std::vector<int> all(static_cast<std::size_t>(m.num_triangles()));
  for (int t = 0; t < m.num_triangles(); ++t) all[static_cast<std::size_t>(t)] = t;
  const Mesh b = refine_bisection(m, all);
  CHECK(b.num_triangles() >= 2 * m.num_triangles());
  CHECK(total_area(b) == doctest::Approx(1.0));
}

TEST_CASE("bisection of one element stays conforming") {
  const Mesh m = build_unit_square(2);
  const Mesh b = refine_bisection(m, std::vector<int>{0});
  CHECK(b.num_triangles() > m.num_triangles());
  CHECK(min_angle(b) >= 0.5 * min_angle(m));
}

TEST_CASE("property: repeated random bisection keeps invariants") {
  std::mt19937_64 rng(12345);
  for (int trial = 0; trial < 8; ++trial) {
    Mesh m = trial % 2 == 0 ? build_unit_square(2 + trial % 3) : build_square_with_hole(2.0, 0.5, 4);
    const double area = total_area(m);
    const double angle0 = min_angle(m);
    const int chi = euler(m);
    for (int step = 0; step < 6; ++step) {
      const auto marks = random_marks(m, rng, 0.2);
      const int before = m.num_triangles();
      m = refine_bisection(m, marks);  // the constructor re-validates conformity
      CHECK(m.num_triangles() >= before + static_cast<int>(marks.size()));
      CHECK(total_area(m) == doctest::Approx(area).epsilon(1e-12));
      CHECK(euler(m) == chi);
      // Newest-vertex bisection produces finitely many similarity classes.
      CHECK(min_angle(m) >= 0.5 * angle0 - 1e-12);
    }
  }
}

TEST_CASE("mesh text round trip") {
  for (const Mesh& m : {build_unit_square(1), build_square_with_hole(2.0, 0.5, 4, BoundaryTag::Neumann),
                        refine_bisection(build_unit_square(3), std::vector<int>{0, 5})}) {
    const Mesh back = read_mesh(write_mesh(m));
    CHECK(back == m);
    CHECK(write_mesh(back) == write_mesh(m));
  }
}

TEST_CASE("mesh parse errors name the line") {
  const std::string bad_index =
      "$Vertices 3\n0 0\n1 0\n0 1\n$Triangles 1\n0 1 999\n$BoundaryEdges 3\n0 1 D\n1 2 D\n2 0 D\n";
  try {
    (void)read_mesh(bad_index);
    FAIL("expected a parse error");
  } catch (const MeshParseError& e) {
    CHECK(e.line() == 6);
    CHECK(std::string(e.what()).find("6") != std::string::npos);
  }
  const std::string bad_header = "$Verts 3\n";
  CHECK_THROWS_AS((void)read_mesh(bad_header), MeshParseError);
  const std::string bad_tag =
      "$Vertices 3\n0 0\n1 0\n0 1\n$Triangles 1\n0 1 2\n$BoundaryEdges 3\n0 1 X\n1 2 D\n2 0 D\n";
  CHECK_THROWS_AS((void)read_mesh(bad_tag), MeshParseError);
  const std::string clockwise =
      "$Vertices 3\n0 0\n1 0\n0 1\n$Triangles 1\n0 2 1\n$BoundaryEdges 3\n0 1 D\n1 2 D\n2 0 D\n";
  CHECK_THROWS_AS((void)read_mesh(clockwise), MeshError);
}
