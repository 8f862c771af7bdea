#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "lcde/densities.hpp"
#include "lcde/envelope1d.hpp"
#include "lcde/separation.hpp"

using namespace lcde;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

lin::Mat diag2(double a, double b) {
  lin::Mat m{};
  m[0][0] = a;
  m[1][1] = b;
  return m;
}

SeparationCertificate pairs_cert(const Density& f, double beta, double lam,
                                 double tau, long long budget = 30000,
                                 std::uint64_t seed = 7) {
  return check_separation_pairs(f, SeparationParams{beta, lam, tau}, budget,
                                seed);
}

SeparationCertificate grad_cert(const Density& f, double beta, double lam,
                                double tau) {
  return check_grad_criterion(f, SeparationParams{beta, lam, tau},
                              separation_grid(f, 240, 8.0));
}

double laplace_tau(int d) { return 0.95 * tau_laplace_max(d); }

double bump_lambda(const Density& f, double beta) {
  const double sd = std::sqrt(f.moments().cov[0][0]);
  return lambda_bump(beta, f.dim(), f.bump_normalizer(), sd);
}

}  // namespace

TEST_CASE("scaled norms in the covariance frame") {
  // Euclidean recovery under the identity.
  auto id = MahalanobisContext::from(diag2(1, 1), 2, Vec(2));
  CHECK(mahalanobis(Vec{3, 4}, id) == doctest::Approx(5.0).epsilon(1e-12));

  // Sigma = 4I in d=2: mahalanobis halves, det^{1/2} = 4.
  auto four = MahalanobisContext::from(diag2(4, 4), 2, Vec(2));
  CHECK(mahalanobis(Vec{2, 0}, four) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(four.det_sqrt == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(scaled_norm(Vec{2, 0}, four) == doctest::Approx(0.25).epsilon(1e-12));

  // Sigma = diag(1,4), w = e2: (w' Sigma^{-1} w)^{1/2} / det^{1/2} = (1/2)/2.
  auto an = MahalanobisContext::from(diag2(1, 4), 2, Vec(2));
  CHECK(scaled_norm(Vec{0, 1}, an) == doctest::Approx(0.25).epsilon(1e-12));

  CHECK_THROWS_AS(MahalanobisContext::from(diag2(1, 0), 2, Vec(2)),
                  DegenerateInput);
  lin::Mat indef = diag2(1, -2);
  CHECK_THROWS_AS(MahalanobisContext::from(indef, 2, Vec(2)), DegenerateInput);
}

TEST_CASE("context from a density uses its moments") {
  auto g = Density::gaussian(Vec{0.5, -1.0}, diag2(2.0, 0.5));
  auto ctx = MahalanobisContext::from(g);
  CHECK(ctx.mean.c[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(ctx.mean.c[1] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(ctx.det_sqrt == doctest::Approx(1.0).epsilon(1e-12));
  // chol * chol^T reproduces sigma
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double s = 0;
      for (int k = 0; k < 2; ++k) s += ctx.chol[i][k] * ctx.chol[j][k];
      CHECK(s == doctest::Approx(ctx.sigma[i][j]).epsilon(1e-12));
    }
}

TEST_CASE("parameter validation") {
  auto g = Density::standard_gaussian(1);
  CHECK_THROWS_AS(pairs_cert(g, 0.5, 1.0, kInf), OutOfRange);
  CHECK_THROWS_AS(pairs_cert(g, 2.0, 0.0, kInf), OutOfRange);
  CHECK_THROWS_AS(pairs_cert(g, 2.0, 1.0, -1.0), OutOfRange);
  CHECK_THROWS_AS(grad_cert(g, 0.5, 1.0, kInf), OutOfRange);
}

TEST_CASE("gaussian certificates are tight at the worked constant") {
  for (int d = 1; d <= 3; ++d) {
    CAPTURE(d);
    auto g = Density::standard_gaussian(d);
    for (double beta : {1.0, 2.0}) {
      CAPTURE(beta);
      const double lam = lambda_gaussian(beta, d);
      auto cp = pairs_cert(g, beta, lam, kInf);
      CHECK(cp.pass);
      CHECK(cp.checked == 30000);
      auto cg = grad_cert(g, beta, lam, kInf);
      CHECK(cg.pass);
      CHECK(cg.worst_margin >= -1e-9);  // grid hits the supremum point exactly
      CHECK(cg.worst_margin < 0.01);    // constant is attained, not just valid

      // Half the constant must be caught by both certificates, with the
      // violation depth pinned near 1/2 since the supremum equals lambda.
      auto fp = pairs_cert(g, beta, 0.5 * lam, kInf);
      CHECK_FALSE(fp.pass);
      CHECK(fp.worst_margin < -0.45);
      CHECK(fp.has_witness);
      auto fg = grad_cert(g, beta, 0.5 * lam, kInf);
      CHECK_FALSE(fg.pass);
      CHECK(fg.worst_margin == doctest::Approx(-0.5).epsilon(2e-3));
    }
  }
}

TEST_CASE("gaussian gradient supremum matches the closed form to 1%") {
  const double sups[4] = {0, 0.541780, 0.342198, 0.216139};
  for (int d = 1; d <= 3; ++d) {
    CAPTURE(d);
    auto g = Density::standard_gaussian(d);
    auto fine = separation_grid(g, 2000, 4.0);
    const double sup = grad_ratio_sup(g, 2.0, fine);
    CHECK(sup == doctest::Approx(lambda_gaussian(2, d)).epsilon(0.01));
    CHECK(sup == doctest::Approx(sups[d]).epsilon(0.01));
  }
}

TEST_CASE("laplace certificates under the plateau cap") {
  // Whole-density gradient suprema (no cap), closed forms per dimension;
  // d=3 collapses to 2/sqrt(pi).
  const double sups[4] = {0, 1.1892071150, 1.1968268412, 1.1283791671};
  for (int d = 1; d <= 3; ++d) {
    CAPTURE(d);
    auto f = Density::laplace(d);
    const double lam = lambda_laplace(2, d);
    const double tau = laplace_tau(d);
    auto cp = pairs_cert(f, 2.0, lam, tau);
    auto cg = grad_cert(f, 2.0, lam, tau);
    CHECK(cp.pass);
    CHECK(cg.pass);
    CHECK(cp.checked > 10000);  // cap trims some pairs but not most

    auto fine = separation_grid(f, 2000, 4.0);
    CHECK(grad_ratio_sup(f, 2.0, fine) ==
          doctest::Approx(sups[d]).epsilon(0.01));
  }

  // Half the constant fails in d=1,2. In d=3 the worked constant carries
  // extra dimensional slack and half of it still dominates the true
  // supremum, so both certificates keep passing there.
  for (int d : {1, 2}) {
    CAPTURE(d);
    auto f = Density::laplace(d);
    const double half = 0.5 * lambda_laplace(2, d);
    auto cp = pairs_cert(f, 2.0, half, laplace_tau(d), 100000);
    auto cg = grad_cert(f, 2.0, half, laplace_tau(d));
    CHECK_FALSE(cp.pass);
    CHECK_FALSE(cg.pass);
    CHECK(cp.worst_margin < -0.05);
    CHECK(cg.worst_margin < -0.05);
  }
  {
    auto f = Density::laplace(3);
    const double half = 0.5 * lambda_laplace(2, 3);
    CHECK(pairs_cert(f, 2.0, half, laplace_tau(3), 100000).pass);
    CHECK(grad_cert(f, 2.0, half, laplace_tau(3)).pass);
  }
}

TEST_CASE("compact smooth bump passes with its derived constant") {
  const double sups[4] = {0, 1.420023, 0.721860, 0.366893};
  for (int d = 1; d <= 3; ++d) {
    CAPTURE(d);
    auto f = Density::bump(d);
    const double lam = bump_lambda(f, 2.0);
    auto cp = pairs_cert(f, 2.0, lam, kInf);
    auto cg = grad_cert(f, 2.0, lam, kInf);
    CHECK(cp.pass);
    CHECK(cg.pass);

    auto fp = pairs_cert(f, 2.0, 0.5 * lam, kInf);
    auto fg = grad_cert(f, 2.0, 0.5 * lam, kInf);
    CHECK_FALSE(fp.pass);
    CHECK_FALSE(fg.pass);
    CHECK(fp.worst_margin < -0.3);
    CHECK(fg.worst_margin < -0.3);

    auto fine = separation_grid(f, 2000, 4.0);
    CHECK(grad_ratio_sup(f, 2.0, fine) ==
          doctest::Approx(sups[d]).epsilon(0.002));
  }
}

TEST_CASE("uniform ball jump defeats every smoothness constant") {
  // Pairs straddling the support boundary have density gap ~ the plateau
  // value at vanishing distance, so the margin bottoms out at -1.
  const double small_tau[4] = {0, 0.3, 0.1, 0.05};
  for (int d = 1; d <= 3; ++d) {
    CAPTURE(d);
    auto b = Density::uniform_ball(d, 1.0);
    for (double lam : {0.5, 5.0, 100.0}) {
      CAPTURE(lam);
      for (double tau : {kInf, small_tau[d]}) {
        auto c = check_separation_pairs(b, {1.0, lam, tau}, 20000, 11);
        CHECK_FALSE(c.pass);
        CHECK(c.worst_margin < -0.999);
        REQUIRE(c.has_witness);
        CHECK(norm(c.witness_x) == doctest::Approx(1.0).epsilon(1e-2));
      }
    }
  }

  // A cap below the plateau level excludes the jump from scope entirely:
  // nothing is checked and the certificate passes vacuously.
  const double below[4] = {0, 0.2, 0.05, 0.015};
  for (int d = 1; d <= 3; ++d) {
    CAPTURE(d);
    auto c = check_separation_pairs(Density::uniform_ball(d, 1.0),
                                    {1.0, 0.5, below[d]}, 20000, 11);
    CHECK(c.pass);
    CHECK(c.checked == 0);
  }
}

TEST_CASE("certificates reject constants below the empirical floor") {
  for (int d = 1; d <= 3; ++d) {
    CAPTURE(d);
    const double fl = empirical_lambda_floor(d);
    struct Case {
      Density f;
      double beta, tau;
    };
    const Case cases[] = {
        {Density::standard_gaussian(d), 1.0, kInf},
        {Density::standard_gaussian(d), 2.0, kInf},
        {Density::laplace(d), 2.0, laplace_tau(d)},
        {Density::bump(d), 2.0, kInf},
    };
    for (const auto& cs : cases) {
      CAPTURE(cs.beta);
      auto cp = pairs_cert(cs.f, cs.beta, 0.9 * fl, cs.tau);
      auto cg = grad_cert(cs.f, cs.beta, 0.9 * fl, cs.tau);
      CHECK_FALSE(cp.pass);
      CHECK_FALSE(cg.pass);
    }
    // The floor is exactly tight for the gaussian at beta = 1: a constant
    // 10% above it clears with a 10% margin.
    auto ok = pairs_cert(Density::standard_gaussian(d), 1.0, 1.1 * fl, kInf);
    CHECK(ok.pass);
    CHECK(ok.worst_margin == doctest::Approx(0.1).epsilon(0.05));
  }
}

TEST_CASE("analytic gradients agree with central differences") {
  const double h = 1e-5;
  std::vector<Density> fams;
  for (int d = 1; d <= 3; ++d) {
    fams.push_back(Density::standard_gaussian(d));
    fams.push_back(Density::laplace(d));
    fams.push_back(Density::bump(d));
  }
  fams.push_back(Density::gaussian(Vec{0.4, -0.2}, diag2(1.5, 0.6)));

  for (const auto& f : fams) {
    const int d = f.dim();
    long long used = 0;
    for (const Vec& x : separation_grid(f, 100, 6.0)) {
      const double fx = f.evaluate(x);
      if (fx <= 1e-8) continue;
      const Vec a = fx * f.grad_log(x);
      double scale = 1.0 + norm(a);
      for (int j = 0; j < d; ++j) {
        Vec xp = x, xm = x;
        xp.c[j] += h;
        xm.c[j] -= h;
        const double fd = (f.evaluate(xp) - f.evaluate(xm)) / (2 * h);
        CHECK(std::fabs(fd - a.c[j]) <= 1e-6 * scale);
      }
      ++used;
    }
    CHECK(used > 50);
  }
}

TEST_CASE("worked holder constants") {
  CHECK(lambda_holder(2.0, 1.0) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  // As beta -> 1+ the prefactor collapses to 1 and the constant tends to L.
  CHECK(lambda_holder(1.0 + 1e-7, 0.7) == doctest::Approx(0.7).epsilon(1e-4));
  CHECK(lambda_holder(1.5, 2.0) == doctest::Approx(2.2894284851).epsilon(1e-9));
  CHECK_THROWS_AS(lambda_holder(1.0, 1.0), OutOfRange);
  CHECK_THROWS_AS(lambda_holder(2.5, 1.0), OutOfRange);
  CHECK_THROWS_AS(lambda_holder(1.5, 0.0), OutOfRange);

  // beta (L v L^{1/2}) bbar e^{1/e} (e b_d)^{1/beta}
  const double want = 1.5 * 2.0 * 3.0 * std::exp(1.0 / M_E) *
                      std::pow(M_E * 1.0, 1.0 / 1.5);
  CHECK(lambda_holder_tilde(1.5, 2.0, 1.0, 3.0) ==
        doctest::Approx(want).epsilon(1e-12));
  CHECK_THROWS_AS(lambda_holder_tilde(0.5, 1.0, 1.0, 1.0), OutOfRange);
  CHECK_THROWS_AS(lambda_holder_tilde(1.5, 1.0, -1.0, 1.0), OutOfRange);

  // A gradient-Lipschitz bound turned into a class constant must dominate
  // the tight gaussian one: L = sup |Hessian| = (2 pi)^{-d/2}.
  for (int d = 1; d <= 2; ++d) {
    const double lam = lambda_holder(2.0, std::pow(2 * M_PI, -d / 2.0));
    CHECK(lam > lambda_gaussian(2, d));
    auto g = Density::standard_gaussian(d);
    CHECK(check_grad_criterion(g, {2.0, lam, kInf},
                               separation_grid(g, 500, 8.0))
              .pass);
  }
}

TEST_CASE("certificates are invariant under affine maps") {
  auto g = Density::gaussian(Vec{0.3, -0.7}, diag2(1.3, 0.8));
  const double lam = lambda_gaussian(2, 2);
  auto c0 = pairs_cert(g, 2.0, lam, kInf, 20000, 5);
  auto g0 = grad_cert(g, 2.0, lam, kInf);

  Rng mr(99);
  for (int t = 0; t < 10; ++t) {
    lin::Mat a{};
    double da = 0;
    do {
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          a[i][j] = (i == j ? 1.0 : 0.0) + 0.45 * mr.normal();
      da = lin::det(a, 2);
    } while (std::fabs(da) < 0.05);
    const Vec sh{mr.uniform(-2, 2), mr.uniform(-2, 2)};

    const Moments m = g.moments();
    const Vec mean2 = lin::matvec(a, m.mean, 2) + sh;
    lin::Mat s2{};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
          for (int l = 0; l < 2; ++l)
            s2[i][j] += a[i][k] * m.cov[k][l] * a[j][l];

    auto img = Density::gaussian(mean2, s2);
    auto ct = pairs_cert(img, 2.0, lam, kInf, 20000, 5);
    CHECK(ct.pass == c0.pass);
    CHECK(std::fabs(ct.worst_margin - c0.worst_margin) <=
          1e-6 * std::max(1.0, std::fabs(c0.worst_margin)));

    auto gt = grad_cert(img, 2.0, lam, kInf);
    CHECK(gt.pass == g0.pass);
    CHECK(std::fabs(gt.worst_margin - g0.worst_margin) <=
          1e-6 * std::max(1.0, std::fabs(g0.worst_margin)));
  }
}

TEST_CASE("class nesting into a coarser exponent") {
  // d=1: the sup-density bound comes from the envelope module (= 1), so the
  // inflated constant equals the base one and the laplace stays inside.
  auto rep = nesting_checks(Density::laplace(1),
                            {2.0, lambda_laplace(2, 1), laplace_tau(1)}, 1.5,
                            17);
  CHECK(rep.base_pass);
  CHECK(rep.affine_invariant);
  CHECK(rep.max_margin_deviation <= 1e-6);
  CHECK(rep.nested_pass);
  CHECK(rep.b_used == doctest::Approx(envelope_sup()).epsilon(1e-12));
  CHECK(rep.lambda_nested ==
        doctest::Approx(lambda_laplace(2, 1)).epsilon(1e-12));

  // d>=2 has no built-in sup-density constant.
  auto g2 = Density::standard_gaussian(2);
  SeparationParams base{2.0, lambda_gaussian(2, 2), kInf};
  CHECK_THROWS_AS(nesting_checks(g2, base, 1.5, 17), MissingConstant);

  auto rep2 = nesting_checks(g2, base, 1.5, 17, 1.2);
  CHECK(rep2.base_pass);
  CHECK(rep2.affine_invariant);
  CHECK(rep2.nested_pass);
  CHECK(rep2.b_used == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(rep2.lambda_nested ==
        doctest::Approx(std::pow(1.2, 1.0 / 1.5 - 0.5) * base.lambda)
            .epsilon(1e-12));

  CHECK_THROWS_AS(nesting_checks(g2, base, 0.5, 17, 1.2), OutOfRange);
  CHECK_THROWS_AS(nesting_checks(g2, base, 2.5, 17, 1.2), OutOfRange);
}
