#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lcde/integrals.hpp"

// Density families: piecewise log-affine densities on polyhedral
// subdivisions, plus the named parametric families used as data-generating
// distributions (Gaussian, isotropic Laplace-type, compactly supported bump,
// uniforms, and floor-constrained densities on polytopes). All samplers are
// deterministic given a seed.

namespace lcde {

// One piece: f = exp(form.alpha·x + form.beta) on `cell`.
struct DensityPiece {
  AffineForm form;
  Polytope cell;

  DensityPiece() = default;
  DensityPiece(const AffineForm& f, Polytope c) : form(f), cell(std::move(c)) {}
};

struct Moments {
  Vec mean;
  lin::Mat cov{};
};

// f(x) = exp(alpha_j·x + beta_j) for x in cell E_j; the cells form a
// polyhedral subdivision of the support. The representation kept here is not
// forced to be minimal; kappa() reports the current piece count and
// minimal_representation() produces the canonical merged form.
class LogKAffineDensity {
 public:
  LogKAffineDensity() = default;
  explicit LogKAffineDensity(std::vector<DensityPiece> pieces);

  int dim() const { return dim_; }
  const std::vector<DensityPiece>& pieces() const { return pieces_; }
  int kappa() const { return static_cast<int>(pieces_.size()); }
  // Total facet count over the cells.
  long long gamma() const;
  Subdivision subdivision() const;
  bool bounded_support() const;
  // Facet count of the union of cells; exact when a piece's cell already
  // equals the support (kappa 1), otherwise derived from the support hull
  // (bounded) or the outermost halfspaces (standard constructions).
  int support_facet_count() const;

  int find_cell(const Vec& x) const;  // -1 outside the support
  double log_evaluate(const Vec& x) const;
  double evaluate(const Vec& x) const;

  double total_mass() const;  // exact; truncated-exact on unbounded cells
  void normalize();           // shift all intercepts so total_mass() == 1

 private:
  int dim_ = 0;
  std::vector<DensityPiece> pieces_;
};

// Merge cells sharing the same affine form into single cells and return the
// canonical representation (pairwise distinct alphas). Throws NotConcave when
// probes across cell boundaries detect a concavity violation or when
// same-form cells do not union to a convex set.
LogKAffineDensity minimal_representation(const LogKAffineDensity& f);

// A density with exactly k log-affine pieces whose support has at most m
// facets, built by the standard constructions: product exponentials on
// orthant factors for small k, gauge densities exp(-rho_S) of a polytope S
// with k facets for large k, and two-sided piecewise-linear tents when d = 1.
// Throws EmptyClass when k + m <= d (no such density exists).
LogKAffineDensity make_fkm(int k, int m, int d);

// Density of A X + b when X ~ f: cells map through the affine map and each
// form picks up -log|det A|. Throws DegenerateInput when A is singular.
LogKAffineDensity affine_pushforward(const LogKAffineDensity& f, const lin::Mat& a,
                                     const Vec& b);

// 1 / (vol(P) * min_P f) for a density with bounded support P: how far the
// density dips below the uniform level. 1 means exactly uniform.
double floor_ratio(const LogKAffineDensity& f);

// log f = beta0 - t * max(rho_B(x - c) - 1, 0) on P, where c is the centroid
// of P and B = c + (P - c)/2 is the half-scale core. Piecewise log-affine
// (core + one cone cell per facet), normalized.
LogKAffineDensity core_tilt(const Polytope& p, double t);
// Solve the tilt so that the core B carries the given mass (in (2^-d, 1)).
LogKAffineDensity core_tilt_with_mass(const Polytope& p, double core_mass);

enum class Family {
  gaussian,
  laplace,
  bump,
  uniform_polytope,
  uniform_ball,
  theta_floor,
  piecewise,
};

std::string family_name(Family f);

struct Sample {
  std::vector<Vec> points;
  std::uint64_t seed = 0;
  std::string source;
};

// Immutable density handle covering the named families and arbitrary
// piecewise log-affine densities. Copies share state.
class Density {
 public:
  static Density gaussian(const Vec& mean, const lin::Mat& sigma);
  static Density standard_gaussian(int d);
  // f(x) = (d! V_d)^{-1} exp(-||x||)
  static Density laplace(int d);
  // f(x) = C exp(-1/(1 - ||x||^2)) on the unit ball
  static Density bump(int d);
  static Density uniform_polytope(Polytope p);
  static Density uniform_ball(int d, double radius);
  // Density with f >= theta^{-1} f_P on P, equality attained at the vertices
  // (theta = 1 gives the uniform density on P).
  static Density theta_floor(double theta, Polytope p);
  static Density piecewise(LogKAffineDensity f);

  Family family() const { return family_; }
  int dim() const { return dim_; }
  std::string describe() const;

  double evaluate(const Vec& x) const;
  double log_evaluate(const Vec& x) const;
  // Gradient of log f where defined (a.e. on the support interior); zero for
  // uniform families.
  Vec grad_log(const Vec& x) const;
  Moments moments() const;
  Sample sample(int n, std::uint64_t seed) const;

  // Families with an exact piecewise log-affine form: uniform_polytope,
  // theta_floor, piecewise.
  bool has_piecewise_form() const { return pw_ != nullptr; }
  const LogKAffineDensity& piecewise_form() const;

  const Vec& mean_param() const { return mean_; }
  const lin::Mat& sigma_param() const { return sigma_; }
  double radius_param() const { return radius_; }
  double theta_param() const { return theta_; }
  double bump_normalizer() const { return bump_c_; }
  const Polytope& polytope_param() const;

 private:
  Density() = default;

  Family family_ = Family::gaussian;
  int dim_ = 0;
  Vec mean_;
  lin::Mat sigma_{};
  lin::Mat chol_{};
  lin::Mat sigma_inv_{};
  double radius_ = 1.0;
  double theta_ = 1.0;
  double bump_c_ = 0.0;
  double bump_var_ = 0.0;
  std::shared_ptr<const Polytope> poly_;
  std::shared_ptr<const LogKAffineDensity> pw_;

  struct SamplerTable;
  std::shared_ptr<const SamplerTable> table_;
  void build_piecewise_tables();
};

}  // namespace lcde
