#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "lcde/divergences.hpp"
#include "lcde/quadrature.hpp"
#include "oracles.hpp"

using namespace lcde;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

Polytope interval(double a, double b) { return Polytope({Vec{a}, Vec{b}}); }

Polytope box(const Vec& lo, const Vec& hi) {
  const int d = lo.dim();
  std::vector<Vec> corners;
  for (int mask = 0; mask < (1 << d); ++mask) {
    Vec v(d);
    for (int j = 0; j < d; ++j) v.c[j] = (mask >> j & 1) ? hi.c[j] : lo.c[j];
    corners.push_back(v);
  }
  return Polytope(std::move(corners));
}

Polytope orthant2() {
  return Polytope({Vec{0, 0}}, {Vec{1, 0}, Vec{0, 1}},
                  {HalfSpace(Vec{-1, 0}, 0.0), HalfSpace(Vec{0, -1}, 0.0)});
}

Density uniform_interval(double a, double b) {
  return Density::uniform_polytope(interval(a, b));
}

// Bounded box split along coordinate 0 into two pieces with random tilts.
Density random_split_density(Rng& rng, int d) {
  Vec lo(d), hi(d);
  for (int j = 0; j < d; ++j) hi.c[j] = 1.0;
  double s = rng.uniform(0.3, 0.7);
  Vec mid_hi = hi, mid_lo = lo;
  mid_hi.c[0] = s;
  mid_lo.c[0] = s;
  std::vector<DensityPiece> pieces;
  for (const Polytope& cell : {box(lo, mid_hi), box(mid_lo, hi)}) {
    Vec alpha(d);
    for (int j = 0; j < d; ++j) alpha.c[j] = rng.uniform(-2.0, 2.0);
    pieces.push_back({AffineForm(alpha, 0.0), cell});
  }
  LogKAffineDensity f(std::move(pieces));
  f.normalize();
  return Density::piecewise(std::move(f));
}

// Quadrature oracle on the common refinement, using point evaluation only.
double oracle_sqrt_mass(const Density& f, const Density& g) {
  double s = 0;
  for (const DensityPiece& p : f.piecewise_form().pieces())
    for (const DensityPiece& q : g.piecewise_form().pieces()) {
      auto cell = intersect_cells(p.cell, q.cell);
      if (!cell) continue;
      s += integrate_polytope(
          *cell, [&](const Vec& x) { return std::sqrt(f.evaluate(x) * g.evaluate(x)); },
          1e-10, 14);
    }
  return s;
}

double oracle_kl(const Density& f, const Density& g) {
  double s = 0;
  for (const DensityPiece& p : f.piecewise_form().pieces())
    for (const DensityPiece& q : g.piecewise_form().pieces()) {
      auto cell = intersect_cells(p.cell, q.cell);
      if (!cell) continue;
      s += integrate_polytope(
          *cell,
          [&](const Vec& x) {
            double fv = f.evaluate(x);
            return fv * std::log(fv / g.evaluate(x));
          },
          1e-10, 14);
    }
  return s;
}

lin::Mat mat2(double a, double b, double c, double d) {
  lin::Mat m{};
  m[0][0] = a;
  m[0][1] = b;
  m[1][0] = c;
  m[1][1] = d;
  return m;
}

}  // namespace

TEST_CASE("uniform intervals: frozen values") {
  Density f = uniform_interval(0, 1);
  Density g = uniform_interval(0, 2);

  CHECK(hellinger_sq(f, f) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(kl(f, f) == doctest::Approx(0.0).epsilon(1e-12));

  // (1 - 1/sqrt(2))^2 + 1/2 = 2 - sqrt(2)
  CHECK(hellinger_sq(f, g) == doctest::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-12));
  CHECK(kl(f, g) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(kl(g, f) == kInf);

  DivergenceReport r = divergence_report(f, g);
  CHECK(r.method == DivergenceMethod::exact);
  CHECK(r.error_estimate == 0.0);
  CHECK(!r.has_dx);
}

TEST_CASE("exponential pair on the orthant: exact values through truncation") {
  // f = e^{-x-y}, g = 2 e^{-2x-y} on [0,inf)^2; both mass one.
  Density f = Density::piecewise(
      LogKAffineDensity({{AffineForm(Vec{-1, -1}, 0.0), orthant2()}}));
  Density g = Density::piecewise(
      LogKAffineDensity({{AffineForm(Vec{-2, -1}, std::log(2.0)), orthant2()}}));

  // int sqrt(f g) = sqrt(2) * int e^{-1.5x - y} = 2 sqrt(2) / 3
  double hfg = hellinger_sq(f, g);
  CHECK(hfg == doctest::Approx(2.0 - 4.0 * std::sqrt(2.0) / 3.0).epsilon(1e-10));
  CHECK(hellinger_sq(g, f) == doctest::Approx(hfg).epsilon(1e-12));

  // KL(f,g) = (1,0)·E_f[x] - log 2, KL(g,f) = (-1,0)·E_g[x] + log 2
  CHECK(kl(f, g) == doctest::Approx(1.0 - std::log(2.0)).epsilon(1e-10));
  CHECK(kl(g, f) == doctest::Approx(std::log(2.0) - 0.5).epsilon(1e-10));

  DivergenceReport r = divergence_report(f, g);
  CHECK(r.method == DivergenceMethod::exact);
  CHECK(r.error_estimate > 0.0);  // truncated refinement
  CHECK(r.error_estimate <= 1e-12);
}

TEST_CASE("exact equals quadrature on tilted piecewise pairs") {
  // Tilted density on a triangle against the uniform on the same triangle.
  Polytope tri({Vec{0, 0}, Vec{1, 0}, Vec{0, 1}});
  LogKAffineDensity tilted({{AffineForm(Vec{1, 0}, 0.0), tri}});
  tilted.normalize();
  Density f = Density::uniform_polytope(tri);
  Density g = Density::piecewise(std::move(tilted));

  double exact_h = hellinger_sq(f, g);
  double quad_h = 2.0 - 2.0 * oracle_sqrt_mass(f, g);
  CHECK(exact_h == doctest::Approx(quad_h).epsilon(1e-7));
  CHECK(kl(f, g) == doctest::Approx(oracle_kl(f, g)).epsilon(1e-7));

  // Random two-piece pairs in d = 1 and d = 2 on the unit box.
  Rng rng(20240817u);
  for (int rep = 0; rep < 10; ++rep) {
    int d = 1 + rep % 2;
    Density a = random_split_density(rng, d);
    Density b = random_split_density(rng, d);
    double eh = hellinger_sq(a, b);
    double qh = 2.0 - 2.0 * oracle_sqrt_mass(a, b);
    CHECK(eh == doctest::Approx(qh).epsilon(1e-7));
    double ek = kl(a, b);
    double qk = oracle_kl(a, b);
    CHECK(ek == doctest::Approx(qk).epsilon(1e-7));
    CHECK(eh >= 0.0);
    CHECK(eh <= 2.0);
    CHECK(ek >= 0.0);
    // d_H^2 <= KL for every pair
    CHECK(eh <= ek + 1e-9);
    CHECK(hellinger_sq(b, a) == doctest::Approx(eh).epsilon(1e-12));
  }
}

TEST_CASE("kl support violations") {
  Density sq = Density::uniform_polytope(box(Vec{0, 0}, Vec{1, 1}));
  Density shifted = Density::uniform_polytope(box(Vec{0.5, 0.5}, Vec{1.5, 1.5}));
  CHECK(kl(shifted, sq) == kInf);
  CHECK(kl(sq, shifted) == kInf);

  Density small = Density::uniform_polytope(box(Vec{0.25, 0.25}, Vec{0.75, 0.75}));
  CHECK(kl(small, sq) == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  // Unbounded against bounded support.
  Density expo = Density::piecewise(
      LogKAffineDensity({{AffineForm(Vec{-1, -1}, 0.0), orthant2()}}));
  CHECK(kl(expo, sq) == kInf);

  // All vertices land inside the L-shaped support but the middle of the
  // triangle pokes into the missing quadrant: caught by the mass check.
  LogKAffineDensity lshape({{AffineForm(Vec{0, 0}, -std::log(3.0)), box(Vec{0, 0}, Vec{2, 1})},
                            {AffineForm(Vec{0, 0}, -std::log(3.0)), box(Vec{0, 1}, Vec{1, 2})}});
  Density lsupport = Density::piecewise(std::move(lshape));
  Density tri = Density::uniform_polytope(
      Polytope({Vec{1.9, 0.9}, Vec{0.9, 1.9}, Vec{0.1, 0.1}}));
  CHECK(kl(tri, lsupport) == kInf);
  CHECK(kl(lsupport, tri) == kInf);
}

TEST_CASE("affine invariance of all three divergences") {
  Rng rng(771133u);
  Density a = random_split_density(rng, 2);
  Density b = random_split_density(rng, 2);
  lin::Mat t = mat2(1.3, 0.4, -0.2, 0.9);
  Vec shift{0.7, -0.3};

  Density ta = Density::piecewise(affine_pushforward(a.piecewise_form(), t, shift));
  Density tb = Density::piecewise(affine_pushforward(b.piecewise_form(), t, shift));

  CHECK(hellinger_sq(ta, tb) == doctest::Approx(hellinger_sq(a, b)).epsilon(1e-8));
  CHECK(kl(ta, tb) == doctest::Approx(kl(a, b)).epsilon(1e-8));

  Sample s = a.sample(200, 99u);
  std::vector<Vec> moved;
  for (const Vec& x : s.points) moved.push_back(lin::matvec(t, x, 2) + shift);
  CHECK(dx_sq(ta, tb, moved) == doctest::Approx(dx_sq(a, b, s.points)).epsilon(1e-8));

  // Quadrature path: piecewise against a Gaussian and their pushforwards.
  Density g = Density::gaussian(Vec{0.2, 0.4}, mat2(1.0, 0.3, 0.3, 0.8));
  lin::Mat sig{};
  const lin::Mat& s0 = g.sigma_param();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) sig[i][j] += t[i][k] * s0[k][l] * t[j][l];
  Density tg = Density::gaussian(lin::matvec(t, g.mean_param(), 2) + shift, sig);
  CHECK(hellinger_sq(ta, tg) == doctest::Approx(hellinger_sq(a, g)).epsilon(1e-8));
  CHECK(kl(ta, tg) == doctest::Approx(kl(a, g)).epsilon(1e-8));
}

TEST_CASE("dx_sq: hand values, invalid samples, escaping mass") {
  Density f = uniform_interval(0, 1);
  Density g = uniform_interval(0, 2);
  std::vector<Vec> pts = {Vec{0.1}, Vec{0.5}, Vec{0.9}};

  CHECK(dx_sq(f, f, pts) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(dx_sq(f, g, pts) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  // Not clamped: the reversed pair is negative.
  CHECK(dx_sq(g, f, pts) == doctest::Approx(-std::log(2.0)).epsilon(1e-15));

  std::vector<Vec> outside = {Vec{0.5}, Vec{1.5}};
  CHECK_THROWS_AS((void)dx_sq(g, f, outside), InvalidSample);
  CHECK(dx_sq(f, g, outside) == -kInf);

  DivergenceReport r = divergence_report(f, g, pts);
  CHECK(r.has_dx);
  CHECK(r.dx_sq == doctest::Approx(std::log(2.0)));
  CHECK(r.kl == doctest::Approx(std::log(2.0)));
}

TEST_CASE("monte carlo fallback: shifted Gaussians match closed forms") {
  Density f = Density::standard_gaussian(1);
  lin::Mat one{};
  one[0][0] = 1.0;
  Density g = Density::gaussian(Vec{1.0}, one);

  DivergenceReport r = divergence_report(f, g);
  CHECK(r.method == DivergenceMethod::monte_carlo);
  CHECK(r.error_estimate > 0.0);

  // d_H^2 = 2 - 2 exp(-1/8), KL = 1/2
  double h_true = 2.0 - 2.0 * std::exp(-0.125);
  CHECK(std::fabs(r.hellinger_sq - h_true) <= 2.0 * r.error_estimate);
  CHECK(std::fabs(r.kl - 0.5) <= 2.0 * r.error_estimate);

  // Fixed internal seed: reproducible and symmetric by canonical ordering.
  DivergenceReport r2 = divergence_report(f, g);
  CHECK(r.hellinger_sq == r2.hellinger_sq);
  CHECK(r.kl == r2.kl);
  CHECK(hellinger_sq(g, f) == r.hellinger_sq);

  Density bump2 = Density::bump(2);
  Density g2 = Density::standard_gaussian(2);
  DivergenceReport rb = divergence_report(bump2, g2);
  CHECK(rb.method == DivergenceMethod::monte_carlo);
  CHECK(rb.hellinger_sq > 0.0);
  CHECK(rb.hellinger_sq < 2.0);
  CHECK(rb.kl > 0.0);
  CHECK(rb.kl < kInf);
  CHECK(rb.hellinger_sq <= rb.kl + 3.0 * rb.error_estimate);
  // Gaussian against the bump's bounded support: mass escapes.
  CHECK(kl(g2, bump2) == kInf);
}

TEST_CASE("quadrature path: bounded piecewise against smooth families") {
  Density u = uniform_interval(0, 1);
  Density g = Density::standard_gaussian(1);

  DivergenceReport r = divergence_report(u, g);
  CHECK(r.method == DivergenceMethod::quadrature);

  // KL(U[0,1], N(0,1)) = log sqrt(2 pi) + E[x^2]/2 = log(2 pi)/2 + 1/6
  double kl_true = 0.5 * std::log(2.0 * 3.14159265358979323846) + 1.0 / 6.0;
  CHECK(r.kl == doctest::Approx(kl_true).epsilon(1e-9));

  double s = integrate_interval(
      0.0, 1.0, [&](double x) { return std::sqrt(g.evaluate(Vec{x})); }, 1e-12);
  CHECK(r.hellinger_sq == doctest::Approx(2.0 - 2.0 * s).epsilon(1e-8));
  CHECK(r.hellinger_sq <= r.kl + 1e-9);

  // Support vertex on the bump boundary: f log(f/g) is not integrable.
  Density b = Density::bump(1);
  CHECK(kl(u, b) == kInf);
  Density inner = uniform_interval(-0.25, 0.25);
  double kf = kl(inner, b);
  CHECK(kf > 0.0);
  CHECK(kf < kInf);
  CHECK(hellinger_sq(inner, b) == doctest::Approx(hellinger_sq(b, inner)).epsilon(1e-12));
}

TEST_CASE("theta floor against uniform: exact on a shared square") {
  Polytope sq = box(Vec{0, 0}, Vec{1, 1});
  Density td = Density::theta_floor(2.0, sq);
  Density u = Density::uniform_polytope(sq);

  DivergenceReport r = divergence_report(td, u);
  CHECK(r.method == DivergenceMethod::exact);
  CHECK(r.hellinger_sq > 0.0);
  CHECK(r.kl > 0.0);
  CHECK(r.kl < kInf);
  CHECK(r.hellinger_sq <= r.kl + 1e-9);

  double rev = kl(u, td);
  CHECK(rev > 0.0);
  CHECK(rev < kInf);
  CHECK(r.hellinger_sq <= rev + 1e-9);
}

TEST_CASE("unbounded piecewise pair against an interval oracle") {
  Density f = Density::piecewise(make_fkm(1, 1, 1));  // e^{-x} on [0, inf)
  Density g = Density::piecewise(make_fkm(4, 0, 1));  // two-sided tent on R

  std::vector<double> knots = {0.0};
  for (const DensityPiece& p : g.piecewise_form().pieces())
    for (const Vec& v : p.cell.vertices()) knots.push_back(v.c[0]);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  knots.insert(knots.begin(), knots.front() - 60.0);
  knots.push_back(knots.back() + 90.0);

  double sq_mass = 0.0, kl_ref = 0.0;
  for (size_t i = 0; i + 1 < knots.size(); ++i) {
    sq_mass += integrate_interval(
        knots[i], knots[i + 1],
        [&](double x) { return std::sqrt(f.evaluate(Vec{x}) * g.evaluate(Vec{x})); },
        1e-12);
    kl_ref += integrate_interval(
        std::max(0.0, knots[i]), std::max(0.0, knots[i + 1]),
        [&](double x) {
          double fv = f.evaluate(Vec{x});
          return fv > 0 ? fv * std::log(fv / g.evaluate(Vec{x})) : 0.0;
        },
        1e-12);
  }

  CHECK(hellinger_sq(f, g) == doctest::Approx(2.0 - 2.0 * sq_mass).epsilon(1e-7));
  CHECK(kl(f, g) == doctest::Approx(kl_ref).epsilon(1e-7));
  CHECK(hellinger_sq(g, f) == doctest::Approx(hellinger_sq(f, g)).epsilon(1e-12));
}
