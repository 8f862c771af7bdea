#include "lcde/envelope1d.hpp"

#include <cmath>

namespace lcde {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kInf = std::numeric_limits<double>::infinity();

// lambda, m, a as functions of the conditioning length s = lambda * K.
// Everything downstream works in s; the lambda <-> s translation happens
// only at the public boundary.

double lam_of(double s) { return std::sqrt(envelope_V(s)); }

// 1 - s/(e^s - 1), the mean of the conditioned exponential. Series below
// s = 0.05 where the direct form loses digits.
double m_num(double s) {
  if (s < 0.05) {
    const double s2 = s * s;
    return s / 2 - s2 / 12 + s2 * s2 / 720 - s2 * s2 * s2 / 30240;
  }
  return 1.0 - s / std::expm1(s);
}

double m_of(double s) { return m_num(s) / lam_of(s); }

double a_of(double s) { return s / lam_of(s) - m_of(s); }

// m_of decreases from sqrt(3) to 1; solve m_of(s) = x for x in (1, sqrt(3)).
double solve_m(double x) {
  double lo = 1e-12, hi = 60.0;
  while (m_of(hi) > x) hi *= 2;  // only fires for x within ~1e-23 of 1
  for (int i = 0; i < 160 && hi - lo > 1e-14 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (m_of(mid) > x ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// a_of increases from sqrt(3); solve a_of(s) = x for x > sqrt(3).
double solve_a(double x) {
  double lo = 1e-12, hi = std::max(40.0, 2 * (x + 2));
  while (a_of(hi) < x) hi *= 2;
  for (int i = 0; i < 160 && hi - lo > 1e-14 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (a_of(mid) < x ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double envelope_V(double s) {
  if (s <= 0) throw OutOfRange("envelope_V: s must be positive");
  if (s < 0.05) {
    const double s2 = s * s;
    return s2 / 12 - s2 * s2 / 240 + s2 * s2 * s2 / 6048 -
           s2 * s2 * s2 * s2 / 172800;
  }
  if (s > 350) return 1.0;  // 1 - V(s) below double resolution
  return 1.0 - s * s / (2.0 * (std::cosh(s) - 1.0));
}

double envelope_V_inverse(double y) {
  if (!(y > 0.0) || !(y < 1.0))
    throw OutOfRange("envelope_V_inverse: y must lie in (0, 1)");
  double lo = 0.0, hi = 200.0;
  while (envelope_V(hi) < y) hi *= 2;  // y extremely close to 1
  for (int i = 0; i < 200 && hi - lo > 1e-13 * std::max(1.0, lo); ++i) {
    const double mid = 0.5 * (lo + hi);
    (envelope_V(mid) < y ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

EnvelopeParam envelope_param(double lambda) {
  if (!(lambda > 0.0) || !(lambda < 1.0))
    throw OutOfRange("envelope_param: lambda must lie in (0, 1)");
  const double s = envelope_V_inverse(lambda * lambda);
  EnvelopeParam p;
  p.lambda = lambda;
  p.K = s / lambda;
  p.m = m_of(s);
  p.a = p.K - p.m;
  return p;
}

double envelope_F(double x) {
  const double ax = std::fabs(x);
  if (ax <= 1.0) return 1.0 / std::sqrt(2.0 - x * x);
  if (ax < kSqrt3) {
    const double s = solve_m(ax);
    return lam_of(s) / -std::expm1(-s);
  }
  if (ax == kSqrt3) return 1.0 / (2.0 * kSqrt3);
  const double s = solve_a(ax);
  return lam_of(s) * std::exp(-s) / -std::expm1(-s);
}

double envelope_sup() { return envelope_F(1.0); }

double ExtremalDensity::evaluate(double w) const {
  if (form == Form::two_sided) {
    const double t = w - anchor;
    return t >= 0 ? C * std::exp(-t / a1) : C * std::exp(t / a2);
  }
  if (w < lo || w > hi) return 0.0;
  // Mirror negative anchors onto the canonical positive-anchor form.
  const double ww = anchor < 0 ? -w : w;
  return C * std::exp(-rate * (ww - std::fabs(anchor)));
}

ExtremalDensity extremal_density(double x) {
  ExtremalDensity e;
  e.anchor = x;
  const double ax = std::fabs(x);
  if (ax < 1.0) {
    e.form = ExtremalDensity::Form::two_sided;
    e.C = envelope_F(x);
    e.a1 = (1.0 / e.C - x) / 2.0;
    e.a2 = (1.0 / e.C + x) / 2.0;
    e.lo = -kInf;
    e.hi = kInf;
    return e;
  }
  e.form = ExtremalDensity::Form::truncated_exp;
  e.C = envelope_F(x);
  double s, far;
  if (ax < kSqrt3) {
    s = solve_m(ax);
    e.rate = -lam_of(s);  // density climbs toward the anchor
    far = a_of(s);
  } else {
    s = solve_a(ax);
    e.rate = lam_of(s);
    far = m_of(s);
  }
  e.a = far;
  if (x >= 0) {
    e.lo = -far;
    e.hi = ax;
  } else {
    e.lo = -ax;
    e.hi = far;
  }
  return e;
}

double duality_check(double lambda) {
  const EnvelopeParam p = envelope_param(lambda);
  const double lhs = envelope_F(p.a);
  const double rhs = envelope_F(p.m) * std::exp(-lambda * p.K);
  return std::fabs(lhs - rhs);
}

}  // namespace lcde
