#pragma once

#include "lcde/densities.hpp"

// Squared Hellinger, Kullback-Leibler, and the empirical d_X^2 divergence.
//
// Piecewise log-affine pairs are handled exactly on the common refinement of
// the two subdivisions: on each refined cell both densities are exp-affine,
// so sqrt(f g) is again exp-affine and f log(f/g) integrates via first
// moments. Pairs with one bounded piecewise side and one smooth side fall
// back to adaptive quadrature over the piecewise cells; everything else
// (bump vs Gaussian, unbounded piecewise vs smooth) is estimated by Monte
// Carlo with a reported standard error.

namespace lcde {

enum class DivergenceMethod { exact, quadrature, monte_carlo };

std::string divergence_method_name(DivergenceMethod m);

struct DivergenceReport {
  double hellinger_sq = 0.0;  // in [0, 2]
  double kl = 0.0;            // >= 0, may be +inf
  double dx_sq = 0.0;         // empirical; only meaningful when a sample was given
  bool has_dx = false;
  DivergenceMethod method = DivergenceMethod::exact;
  double error_estimate = 0.0;  // 0 for exact; |integration tol| or 3 SE otherwise
};

// d_H^2(f, g) = integral of (sqrt(f) - sqrt(g))^2 = 2 - 2 * int sqrt(f g).
double hellinger_sq(const Density& f, const Density& g);

// KL(f, g) = int f log(f / g); +inf when mass of f escapes the support of g
// (vertex membership with 1e-9 slack, plus a refinement mass check).
double kl(const Density& f, const Density& g);

// d_X^2 = (1/n) sum log(f_hat(X_i) / f0(X_i)). Points outside the support of
// f_hat contribute -inf (returned as -inf); throws InvalidSample when some
// f0(X_i) = 0. Not clamped: negative values are meaningful for non-MLE f_hat.
double dx_sq(const Density& f_hat, const Density& f0, const std::vector<Vec>& points);
double dx_sq(const Density& f_hat, const Density& f0, const Sample& sample);

// Both divergences (and d_X^2 when a sample is supplied). `method` is the
// weakest method used by either computation; `error_estimate` the larger of
// the two bounds.
DivergenceReport divergence_report(const Density& f, const Density& g);
DivergenceReport divergence_report(const Density& f, const Density& g,
                                   const std::vector<Vec>& points);

}  // namespace lcde
