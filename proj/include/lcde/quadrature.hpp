#pragma once

#include <functional>

#include "lcde/geometry.hpp"

// Adaptive quadrature over intervals and simplices. Serves as the independent
// cross-check for the exact exp-affine formulas and as the numeric path for
// divergences involving smooth (non-piecewise) densities.

namespace lcde {

using ScalarField = std::function<double(const Vec&)>;

// Gauss-Legendre nodes/weights on [-1,1], computed by Newton iteration (no
// tabulated constants). Cached per order.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

double integrate_interval(double a, double b, const std::function<double(double)>& f,
                          double rel_tol = 1e-10, int max_depth = 30);

// Adaptive simplex integration: fixed Duffy-mapped tensor Gauss rule per cell,
// red refinement where the two-order estimate disagrees.
double integrate_simplex(const Simplex& s, const ScalarField& f,
                         double rel_tol = 1e-9, int max_depth = 12);

double integrate_polytope(const Polytope& p, const ScalarField& f,
                          double rel_tol = 1e-9, int max_depth = 12);

// Uniform red refinement of a simplex into 2^d children of equal volume.
std::vector<Simplex> red_refine(const Simplex& s);

}  // namespace lcde
