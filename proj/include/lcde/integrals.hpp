#pragma once

#include "lcde/geometry.hpp"

// Exact integrals of exp-affine functions over simplices and polytopes.
//
// Over a simplex s with vertices v_0..v_d and exponents g_i = dot(alpha, v_i),
//   ∫_s exp(alpha·x + beta) dx = d! vol(s) e^beta DD[exp](g_0,...,g_d)
// where DD is the divided difference of exp at the vertex exponents, and
//   ∫_s x exp(alpha·x + beta) dx
//     = d! vol(s) e^beta Σ_i v_i DD[exp](g_0,...,g_d,g_i)
// (the first moment repeats one node, so the evaluator must handle confluent
// node sets). Unbounded regions are handled by doubling halfspace truncation
// along the decay direction until the relative increment is below 1e-10.

namespace lcde {

struct AffineForm {
  Vec alpha;
  double beta = 0.0;

  AffineForm() = default;
  AffineForm(const Vec& a, double b) : alpha(a), beta(b) {}
  double eval(const Vec& x) const { return dot(alpha, x) + beta; }
};

// Divided difference of exp at up to 6 nodes. Symmetric under permutations
// (nodes are sorted internally) and strictly positive. The quotient recursion
// switches to a centered series whenever a node subrange clusters within
// 1e-4, which also covers repeated nodes.
double exp_divdiff(const double* nodes, int count);

double exp_affine_integral(const Simplex& s, const AffineForm& f);
Vec moment_exp_affine_integral(const Simplex& s, const AffineForm& f);
// ∫_s x x^T exp(f): repeats two nodes per vertex pair, so d+3 <= 6 nodes.
lin::Mat second_moment_exp_affine_integral(const Simplex& s, const AffineForm& f);

// ∫_P exp(f) over a polytope; unbounded cells require dot(f.alpha, r) < 0 for
// every recession ray (NotIntegrable otherwise).
double exp_integral(const Polytope& p, const AffineForm& f);
Vec exp_moment(const Polytope& p, const AffineForm& f);
lin::Mat exp_second_moment(const Polytope& p, const AffineForm& f);

// c_{K,alpha} = ∫_K exp(-alpha·x) dx. NotIntegrable when K contains a line or
// alpha is outside the interior of the recession cone's dual.
double normalizer(const Polytope& k, const Vec& alpha);

// Bounded truncation K ∩ {alpha·x <= min_K alpha·x + t}. Exact for V+ray
// cells (ray exit points per vertex/ray pair).
Polytope truncate(const Polytope& k, const Vec& alpha, double t);

// P(Gamma(d) <= t) = 1 - e^{-t} Σ_{l<d} t^l / l!
double gamma_lower(int d, double t);

struct SliceBounds {
  double lower = 0, ratio = 0, upper = 0;
  bool ok = false;
};
// Checks gamma_lower(d,t) <= vol(K ∩ {alpha·x <= m+t}) / ∫_K e^{-(alpha·x-m)}
// <= e^t with m = min_K alpha·x.
SliceBounds slice_ratio_check(const Polytope& k, const Vec& alpha, double t);

struct SlabBounds {
  double lhs = 0, rhs = 0;
  bool ok = false;
};
// Slab volumes mu(t) = vol(K ∩ {t-1 <= alpha·x - m <= t}) obey
// mu(t) <= ((t^d - (t-1)^d) / (s^d - (s-1)^d)) mu(s) for 1 <= s <= t-1.
SlabBounds slab_ratio_check(const Polytope& k, const Vec& alpha, double s, double t);

}  // namespace lcde
