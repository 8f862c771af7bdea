#pragma once

#include <vector>

#include "lcde/core.hpp"
#include "lcde/geometry.hpp"

// Convex inner envelopes of the unit cube and simplex, plus inner polytopal
// approximations whose vertex counts grow only logarithmically in 1/eta.
//
// The cube envelope at level eta is
//     J_eta = { x in [0,1]^d : prod_j min(x_j, 1 - x_j) >= eta },
// a convex body invariant under the 2^d coordinate reflections x_j -> 1-x_j.
// Its polytopal approximation P_eta is assembled from a recursive
// piecewise-affine profile: dyadic knots w_k = 2^{-k} eta^{1/d},
// z_k = 2^{(d-1)k} eta^{1/d}, the decreasing profile interpolating
// (eta/z)^{1/(d-1)} at those knots, and the epigraph recursion
//     L_d = { (x, z) : gauge_{d-1}(x) >= profile(z) }
// whose base case is the ray [eta, inf). P_eta is the intersection of the
// reflected copies of L_d inside the cube; supported for d in {2, 3}.

namespace lcde {

struct Invelope {
  double eta = 0.0;
  int dim = 0;
};

// Throws OutOfRange unless d in {1,2,3} and 0 < eta <= 2^{-d}.
Invelope make_invelope(double eta, int d);

// True iff prod_j min(x_j, 1-x_j) >= eta (with a relative slack of 1e-12 so
// that boundary-lattice points survive rounding). Caller supplies x in Q.
bool invelope_contains(const Invelope& J, const Vec& x);

// mu(Q \ J_eta) = 2^d eta sum_{l=0}^{d-1} log^l(2^{-d}/eta) / l!
// Throws OutOfRange for eta outside (0, 2^{-d}] or unsupported dim.
double complement_volume(const Invelope& J);

struct InvelopePolytope {
  double eta = 0.0;
  int dim = 0;
  std::vector<Vec> vertices;  // extreme points, closed under reflections
  int vertex_count = 0;
  bool degenerate = false;  // eta == 2^{-d}: the set collapses to the center
  Polytope polytope;        // full-dimensional hull; empty when degenerate
};

// Inner polytopal approximation of J_eta. d in {2,3}, eta in (0, 2^{-d}].
InvelopePolytope build_P(double eta, int d);

// Exact membership via the recursive gauge; independent of the hull's
// halfspace representation.
bool invelope_polytope_contains(const InvelopePolytope& P, const Vec& x);

// Exact volume by integrating the piecewise-affine profile over its patch
// decomposition; an independent cross-check of polytope.volume().
double invelope_polytope_volume(const InvelopePolytope& P);

// Triangulation of outer \ Int(inner) into simplices with pairwise disjoint
// interiors covering the shell exactly. Requires the same dim and
// outer.eta < inner.eta (inner sits strictly inside outer); throws NotNested
// otherwise. When the inner set is the degenerate center point and d == 2 the
// result is the fan over the outer polygon (one triangle per vertex).
std::vector<Simplex> shell_triangulation(const InvelopePolytope& outer,
                                         const InvelopePolytope& inner);

// Envelope inside the standard simplex conv{e_1,...,e_{d+1}}: a barycentric
// point x belongs iff prod_{l != j} x_l >= eta for every j.
struct SimplexInvelope {
  double eta = 0.0;
  int dim = 0;  // d: points carry d+1 barycentric coordinates

  bool contains(const Vec& bary) const;
  // Membership of y in R^d in the projection (drop the last coordinate) of
  // the top cell { x : x_{d+1} maximal } intersected with the envelope;
  // lifts y via x_{d+1} = 1 - sum_i y_i.
  bool contains_projected(const Vec& y) const;
};

// Throws OutOfRange unless d in {1,2,3} and 0 < eta <= (d+1)^{-d}.
SimplexInvelope simplex_invelope(double eta, int d);

}  // namespace lcde
