#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lcde/geometry.hpp"
#include "oracles.hpp"

using namespace lcde;

namespace {

std::vector<Vec> random_cloud(int n, int d, Rng& rng, double scale = 1.0) {
  std::vector<Vec> pts;
  for (int i = 0; i < n; ++i) {
    Vec p(d);
    for (int j = 0; j < d; ++j) p.c[j] = scale * rng.normal();
    pts.push_back(p);
  }
  return pts;
}

}  // namespace

TEST_CASE("hull of a square with interior points") {
  std::vector<Vec> pts = {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}, {0.25, 0.75}};
  Hull h = convex_hull(pts);
  CHECK(h.vertices.size() == 4);
  CHECK(h.facets.size() == 4);
  CHECK(h.volume() == doctest::Approx(1.0).epsilon(1e-12));
  // Interior points are not hull vertices.
  for (int id : h.vertices) CHECK(id < 4);
}

TEST_CASE("hull merges coplanar facets: axis cube") {
  std::vector<Vec> pts;
  for (int i = 0; i < 8; ++i)
    pts.push_back(Vec{(double)(i & 1), (double)((i >> 1) & 1), (double)((i >> 2) & 1)});
  // Add face-center and interior points; none should become vertices.
  pts.push_back(Vec{0.5, 0.5, 0.0});
  pts.push_back(Vec{0.5, 0.5, 0.5});
  Hull h = convex_hull(pts);
  CHECK(h.vertices.size() == 8);
  CHECK(h.facets.size() == 6);
  CHECK(h.volume() == doctest::Approx(1.0).epsilon(1e-12));
  Polytope p(pts);
  EulerReport er = euler_check(p);
  CHECK(er.ok);
  CHECK(er.v == 8);
  CHECK(er.e == 12);
  CHECK(er.f == 6);
}

TEST_CASE("random hulls: support function and MC volume oracles") {
  for (int d = 2; d <= 3; ++d) {
    for (int rep = 0; rep < 5; ++rep) {
      Rng rng(Rng::derive(911, d * 100 + rep));
      auto pts = random_cloud(40 + 10 * rep, d, rng);
      Hull h = convex_hull(pts);
      std::vector<Vec> claimed;
      for (int id : h.vertices) claimed.push_back(h.points[id]);
      double viol = oracle::support_violation(pts, claimed, 500, rep + 7);
      CHECK(viol < 1e-9);
      // Facet planes: all points inside, facet vertices on the plane.
      for (size_t f = 0; f < h.facets.size(); ++f) {
        for (const Vec& p : pts) CHECK(h.facet_planes[f].eval(p) < 1e-8);
        for (int id : h.facets[f])
          CHECK(std::fabs(h.facet_planes[f].eval(h.points[id])) < 1e-8);
      }
      auto member = [&](const Vec& x) {
        for (const auto& fp : h.facet_planes)
          if (fp.eval(x) > 0) return false;
        return true;
      };
      auto box = oracle::bounding_box(pts, 0.1);
      auto mc = oracle::mc_volume(box, member, 40000, rep + 13);
      CHECK(std::fabs(h.volume() - mc.value) < 4 * mc.se + 1e-9);
    }
  }
}

TEST_CASE("4d hull volume on a hypercube") {
  std::vector<Vec> pts;
  for (int i = 0; i < 16; ++i) {
    Vec p(4);
    for (int j = 0; j < 4; ++j) p.c[j] = (double)((i >> j) & 1);
    pts.push_back(p);
  }
  Hull h = convex_hull(pts);
  CHECK(h.vertices.size() == 16);
  CHECK(h.volume() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("degenerate input throws") {
  std::vector<Vec> line = {{0, 0}, {1, 1}, {2, 2}, {3, 3}};
  CHECK_THROWS_AS(convex_hull(line), DegenerateInput);
  std::vector<Vec> plane3d = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
  CHECK_THROWS_AS(convex_hull(plane3d), DegenerateInput);
  std::vector<Vec> built = {{0.0}, {0.0}, {0.0}};
  CHECK_THROWS_AS(convex_hull(built), DegenerateInput);
}

TEST_CASE("1d hull") {
  std::vector<Vec> pts = {{0.3}, {-1.0}, {2.0}, {0.9}};
  Hull h = convex_hull(pts);
  CHECK(h.vertices.size() == 2);
  CHECK(h.points[h.vertices[0]].c[0] == doctest::Approx(-1.0));
  CHECK(h.points[h.vertices[1]].c[0] == doctest::Approx(2.0));
  Polytope p(pts);
  CHECK(p.volume() == doctest::Approx(3.0));
  CHECK(p.facet_count() == 2);
}

TEST_CASE("triangulation partitions the hull") {
  for (int d = 2; d <= 3; ++d) {
    Rng rng(Rng::derive(2024, d));
    auto pts = random_cloud(30, d, rng);
    Polytope p(pts);
    const auto& tris = p.triangulation();
    double tv = 0;
    for (const Simplex& s : tris) tv += s.volume();
    CHECK(tv == doctest::Approx(p.volume()).epsilon(1e-12));

    Subdivision sub;
    for (const Simplex& s : tris) {
      std::vector<Vec> vs(s.v.begin(), s.v.begin() + s.nverts());
      sub.cells.push_back(Polytope(vs));
    }
    auto rep = validate_subdivision(sub, p, 55);
    for (const auto& v : rep.violations) INFO(v);
    CHECK(rep.ok);
  }
}

TEST_CASE("triangulation fan count stays within the d=3 bound") {
  for (int rep = 0; rep < 4; ++rep) {
    Rng rng(Rng::derive(31337, rep));
    auto pts = random_cloud(25, 3, rng);
    Polytope p(pts);
    EulerReport er = euler_check(p);
    INFO(er.detail);
    CHECK(er.ok);
    CHECK(er.triangulation_cells <= 3LL * er.v - 11);
  }
}

TEST_CASE("validate_subdivision flags overlaps and gaps") {
  Polytope square(std::vector<Vec>{{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  // Overlap: two rectangles covering [0,0.6] and [0.4,1] in x.
  Subdivision overlap;
  overlap.cells.push_back(Polytope(std::vector<Vec>{{0, 0}, {0.6, 0}, {0.6, 1}, {0, 1}}));
  overlap.cells.push_back(Polytope(std::vector<Vec>{{0.4, 0}, {1, 0}, {1, 1}, {0.4, 1}}));
  auto r1 = validate_subdivision(overlap, square, 99);
  CHECK(!r1.ok);
  bool saw_overlap = false;
  for (const auto& v : r1.violations)
    if (v.find("overlap") != std::string::npos) saw_overlap = true;
  CHECK(saw_overlap);

  // Gap: only half the square covered.
  Subdivision gap;
  gap.cells.push_back(Polytope(std::vector<Vec>{{0, 0}, {0.5, 0}, {0.5, 1}, {0, 1}}));
  auto r2 = validate_subdivision(gap, square, 99);
  CHECK(!r2.ok);
  CHECK(r2.coverage < 0.6);

  // T-joint: left cell split in two, right cell whole; the split vertex sits
  // mid-edge on the right cell.
  Subdivision tj;
  tj.cells.push_back(Polytope(std::vector<Vec>{{0, 0}, {0.5, 0}, {0.5, 0.5}, {0, 0.5}}));
  tj.cells.push_back(Polytope(std::vector<Vec>{{0, 0.5}, {0.5, 0.5}, {0.5, 1}, {0, 1}}));
  tj.cells.push_back(Polytope(std::vector<Vec>{{0.5, 0}, {1, 0}, {1, 1}, {0.5, 1}}));
  auto r3 = validate_subdivision(tj, square, 99);
  bool saw_tjoint = false;
  for (const auto& v : r3.violations)
    if (v.find("non-face") != std::string::npos) saw_tjoint = true;
  CHECK(saw_tjoint);

  // A clean quadrant split passes.
  Subdivision quad;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double x0 = 0.5 * i, y0 = 0.5 * j;
      quad.cells.push_back(Polytope(
          std::vector<Vec>{{x0, y0}, {x0 + 0.5, y0}, {x0 + 0.5, y0 + 0.5}, {x0, y0 + 0.5}}));
    }
  auto r4 = validate_subdivision(quad, square, 99);
  for (const auto& v : r4.violations) INFO(v);
  CHECK(r4.ok);
}

TEST_CASE("clip cube by halfspace") {
  std::vector<Vec> pts;
  for (int i = 0; i < 8; ++i)
    pts.push_back(Vec{(double)(i & 1), (double)((i >> 1) & 1), (double)((i >> 2) & 1)});
  Polytope cube(pts);
  auto half = clip(cube, HalfSpace(Vec{1, 0, 0}, 0.5));
  REQUIRE(half.has_value());
  CHECK(half->volume() == doctest::Approx(0.5).epsilon(1e-12));
  // Diagonal cut: corner tetrahedron.
  auto corner = clip(cube, HalfSpace(Vec{-1, -1, -1}, -2.5));
  REQUIRE(corner.has_value());
  CHECK(corner->volume() == doctest::Approx(1.0 / 6 / 8).epsilon(1e-9));
  // Cut that misses entirely.
  CHECK(!clip(cube, HalfSpace(Vec{1, 0, 0}, -0.5)).has_value());
  // Cut that keeps everything returns the polytope unchanged.
  auto all = clip(cube, HalfSpace(Vec{1, 0, 0}, 2.0));
  REQUIRE(all.has_value());
  CHECK(all->volume() == doctest::Approx(1.0));
}

TEST_CASE("intersect_cells") {
  Polytope a(std::vector<Vec>{{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  Polytope b(std::vector<Vec>{{0.5, 0.5}, {1.5, 0.5}, {1.5, 1.5}, {0.5, 1.5}});
  auto c = intersect_cells(a, b);
  REQUIRE(c.has_value());
  CHECK(c->volume() == doctest::Approx(0.25).epsilon(1e-12));
  // Touching squares share only an edge: no full-dimensional intersection.
  Polytope t(std::vector<Vec>{{1, 0}, {2, 0}, {2, 1}, {1, 1}});
  CHECK(!intersect_cells(a, t).has_value());
}

TEST_CASE("gamma counts facets across cells") {
  Subdivision s;
  s.cells.push_back(Polytope(std::vector<Vec>{{0, 0}, {1, 0}, {0, 1}}));
  s.cells.push_back(Polytope(std::vector<Vec>{{1, 0}, {1, 1}, {0, 1}}));
  CHECK(gamma(s) == 6);
  // An unbounded cone cell counts the halfspaces it was given.
  std::vector<HalfSpace> hs = {HalfSpace(Vec{0, -1}, 0.0), HalfSpace(Vec{-1, 1}, 0.0)};
  s.cells.push_back(Polytope({Vec{0, 0}}, {Vec{1, 0}, Vec{1, 1}}, hs));
  CHECK(gamma(s) == 8);
}

TEST_CASE("unbounded cell membership uses supplied halfspaces") {
  std::vector<HalfSpace> hs = {HalfSpace(Vec{-1, 0}, 0.0), HalfSpace(Vec{0, -1}, 0.0)};
  Polytope orthant({Vec{0, 0}}, {Vec{1, 0}, Vec{0, 1}}, hs);
  CHECK(!orthant.bounded());
  CHECK(orthant.contains(Vec{2, 3}));
  CHECK(!orthant.contains(Vec{-0.1, 1}));
  CHECK_THROWS_AS(orthant.volume(), NotIntegrable);
}
