#pragma once

#include "lcde/densities.hpp"

// Log-concave maximum likelihood: tent-function parametrization by heights at
// the data sites, the convex objective
//   sigma(y) = -(1/n) sum_i w_i y_i + int_{C_n} exp(hbar_y),
// and a subgradient solver with optional quasi-Newton acceleration. hbar_y is
// the least concave majorant of {(X_i, y_i)}, computed as the upper hull of
// the lifted points in R^{d+1}; the minimizer of sigma is the log of the MLE.

namespace lcde {

// One cell of the tent triangulation: a d-simplex of sites together with the
// affine form of hbar on it. site[j] is the site index of cell vertex j.
struct TentPiece {
  Simplex cell;
  AffineForm form;
  std::array<int, kMaxDim + 1> site{};
};

struct TentFunction {
  Polytope support_hull;             // C_n
  std::vector<Vec> sites;
  std::vector<double> heights;       // y
  std::vector<double> weights;       // site multiplicities (all 1 unless merged)
  std::vector<TentPiece> triangulation;

  // min over the facet forms on the hull; -inf outside.
  double evaluate(const Vec& x) const;
};

// Least concave majorant of {(sites_i, heights_i)}: upper facets of the
// lifted convex hull, projected back down. Throws DegenerateInput when the
// sites are affinely dependent or duplicated (the solver merges duplicates
// into weights before calling this).
TentFunction upper_hull_tent(const std::vector<Vec>& sites,
                             const std::vector<double>& heights);

// sigma(y); exact per-simplex integrals.
double objective(const TentFunction& tent);

// Subgradient of sigma at the tent's heights: component i is
// -w_i/W + sum_S int_S exp(hbar) * (barycentric weight of site i on S).
std::vector<double> objective_subgradient(const TentFunction& tent);

// The tent as a piecewise log-affine density (one piece per triangulation
// cell). Exact mass 1 only after a fit's terminal renormalization.
LogKAffineDensity tent_density(const TentFunction& tent);

enum class StepRule { diminishing, constant };

struct FitConfig {
  int max_iter = 2000;
  double tol = 1e-7;       // relative objective change defining the plateau
  int patience = 50;       // iterations the plateau must persist
  StepRule step_rule = StepRule::diminishing;
  double step_scale = 0.5;  // first subgradient move size (auto-normalized)
  bool quasi_newton = true;  // space-dilation variable-metric acceleration
  int warmup = 10;           // plain subgradient iterations before acceleration
  std::uint64_t seed = 0;    // reserved for stochastic step rules
  double degenerate_tol = 1e-10;  // reject hulls with volume <= tol * diam^d
};

struct MLEFit {
  TentFunction log_density;  // renormalized: int exp == 1 up to roundoff
  double integral = 0.0;
  std::vector<double> objective_trace;  // best objective after each iteration
  int iterations = 0;
  bool converged = false;
};

// Minimize sigma. Duplicate points are merged with multiplicity weights;
// fewer than d+1 distinct points or a degenerate hull throw DegenerateInput.
// A fit that never reaches the plateau is returned with converged = false.
MLEFit fit(const std::vector<Vec>& points, const FitConfig& config = {});
MLEFit fit(const Sample& sample, const FitConfig& config = {});

}  // namespace lcde
