#pragma once

#include "lcde/core.hpp"

// Pointwise supremum ("envelope") of all mean-zero unit-variance log-concave
// densities on R, together with the log-affine extremal densities that attain
// it and the parametric machinery behind them.
//
// Everything is driven by one scalar family: a unit-rate exponential
// conditioned to [0, s) has variance envelope_V(s), and rescaling by a slope
// lambda in (0,1) gives a log-affine density on an interval [-m, a] with mean
// zero and unit variance once s solves envelope_V(s) = lambda^2. The envelope
// itself is closed-form on [-1, 1] and is evaluated through the inverses of
// m and a (against the slope parameter) outside.

namespace lcde {

// Variance of a unit-rate exponential conditioned to [0, s). Strictly
// increasing from 0 to 1; series evaluation near 0 avoids cosh cancellation.
double envelope_V(double s);

// Inverse of envelope_V on (0, 1) by bisection; OutOfRange outside (0, 1).
double envelope_V_inverse(double y);

// Slope-indexed parameters of the extremal log-affine family. The density
// with slope lambda lives on [-m, a] with a + m = K.
struct EnvelopeParam {
  double lambda = 0.0;  // (0, 1)
  double K = 0.0;       // (2*sqrt(3), inf), increasing in lambda
  double m = 0.0;       // (1, sqrt(3)), decreasing in lambda
  double a = 0.0;       // (sqrt(3), inf), increasing in lambda
};

// OutOfRange unless lambda in (0, 1). Satisfies envelope_V(lambda * K) =
// lambda^2 to bisection accuracy.
EnvelopeParam envelope_param(double lambda);

// The envelope itself: even, equal to (2 - x^2)^(-1/2) on [-1, 1], and
// resolved through the m- and a-inverses beyond. Peaks at x = +-1 with
// value 1 and decays like e^{-|x|+1} in the tails.
double envelope_F(double x);

// max_x envelope_F(x) = envelope_F(1) = 1.
double envelope_sup();

// Log-affine density attaining envelope_F at a chosen anchor point. Two
// shapes: a two-sided exponential peak (|anchor| < 1) or a truncated
// exponential whose anchor sits at an endpoint of the support (|anchor| >= 1).
struct ExtremalDensity {
  enum class Form { two_sided, truncated_exp };

  Form form = Form::two_sided;
  double anchor = 0.0;
  double C = 0.0;  // density value at the anchor, = envelope_F(anchor)

  // two_sided: C * exp(-(w - anchor)/a1) right of the anchor and
  // C * exp((w - anchor)/a2) left of it.
  double a1 = 0.0;
  double a2 = 0.0;

  // truncated_exp (written for anchor > 0; negative anchors mirror):
  // C * exp(-rate * (w - anchor)) on [-a, anchor]. rate < 0 for anchors in
  // (1, sqrt(3)) -- the density climbs toward the anchor -- and rate > 0
  // past sqrt(3).
  double rate = 0.0;
  double a = 0.0;

  double lo = 0.0, hi = 0.0;  // support, +-inf for two_sided

  double evaluate(double w) const;
};

ExtremalDensity extremal_density(double x);

// |F(a(lambda)) - F(m(lambda)) e^{-lambda K}|, evaluated through the two
// independent inverse paths; small residuals certify them against each other.
double duality_check(double lambda);

}  // namespace lcde
