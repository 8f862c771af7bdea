#include "lcde/divergences.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lcde/quadrature.hpp"

namespace lcde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMcSamples = 1000000;
// Fixed seed: repeated calls on the same pair return the same estimate.
constexpr std::uint64_t kMcSeed = 0x9e1d5f0dULL;

struct ValErr {
  double value = 0.0;
  DivergenceMethod method = DivergenceMethod::exact;
  double error = 0.0;
};

bool bounded_support(const Density& f) {
  switch (f.family()) {
    case Family::gaussian:
    case Family::laplace:
      return false;
    case Family::bump:
    case Family::uniform_ball:
      return true;
    default:
      return f.piecewise_form().bounded_support();
  }
}

// Deterministic total order on densities, so that symmetric computations
// (truncation side in the exact path, sampling side in Monte Carlo) pick the
// same representative for (f, g) and (g, f).
std::vector<double> density_key(const Density& f) {
  std::vector<double> k;
  k.push_back(static_cast<double>(f.family()));
  k.push_back(static_cast<double>(f.dim()));
  if (f.has_piecewise_form()) {
    const LogKAffineDensity& pw = f.piecewise_form();
    k.push_back(static_cast<double>(pw.kappa()));
    std::vector<std::vector<double>> forms;
    for (const DensityPiece& p : pw.pieces()) {
      std::vector<double> row(p.form.alpha.c.begin(), p.form.alpha.c.end());
      row.push_back(p.form.beta);
      forms.push_back(std::move(row));
    }
    std::sort(forms.begin(), forms.end());
    for (const auto& row : forms) k.insert(k.end(), row.begin(), row.end());
  } else {
    for (double v : f.mean_param().c) k.push_back(v);
    for (int i = 0; i < f.dim(); ++i)
      for (int j = 0; j < f.dim(); ++j) k.push_back(f.sigma_param()[i][j]);
    k.push_back(f.radius_param());
  }
  return k;
}

// Walk the common refinement of two piecewise densities, adding
// fn(f_form, g_form, refined_cell) over all nonempty cell intersections.
// When both cells are unbounded the f side is truncated along its own decay
// direction and doubled until the pair's contribution stabilizes.
template <class Fn>
double refine_sum(const LogKAffineDensity& f, const LogKAffineDensity& g, Fn fn,
                  bool* truncated = nullptr) {
  double total = 0.0;
  for (const DensityPiece& p : f.pieces())
    for (const DensityPiece& q : g.pieces()) {
      if (p.cell.bounded() || q.cell.bounded()) {
        auto c = intersect_cells(p.cell, q.cell);
        if (c) total += fn(p.form, q.form, *c);
        continue;
      }
      if (truncated) *truncated = true;
      const Vec dir = -1.0 * p.form.alpha;
      double t = 10.0, prev = 0.0;
      bool have_prev = false, done = false;
      for (int it = 0; it < 60 && !done; ++it) {
        auto c = intersect_cells(truncate(p.cell, dir, t), q.cell);
        double val = c ? fn(p.form, q.form, *c) : 0.0;
        if (have_prev &&
            std::fabs(val - prev) <= 1e-14 * std::max(1.0, std::fabs(val))) {
          total += val;
          done = true;
        }
        prev = val;
        have_prev = true;
        t *= 2.0;
      }
      if (!done)
        throw NotIntegrable("divergences: refinement truncation did not converge");
    }
  return total;
}

// int sqrt(f g): on each refined cell sqrt(f g) = exp of the averaged form.
double exact_sqrt_mass(const LogKAffineDensity& f, const LogKAffineDensity& g,
                       bool* truncated) {
  return refine_sum(
      f, g,
      [](const AffineForm& pf, const AffineForm& qf, const Polytope& cell) {
        AffineForm avg(0.5 * (pf.alpha + qf.alpha), 0.5 * (pf.beta + qf.beta));
        return exp_integral(cell, avg);
      },
      truncated);
}

bool pw_contains(const LogKAffineDensity& g, const Vec& x) {
  for (const DensityPiece& q : g.pieces())
    if (q.cell.contains(x, 1e-9)) return true;
  return false;
}

ValErr exact_kl(const Density& fd, const Density& gd) {
  const LogKAffineDensity& f = fd.piecewise_form();
  const LogKAffineDensity& g = gd.piecewise_form();
  ValErr out;
  // Support check: every f vertex inside supp g (1e-9 slack), no unbounded f
  // against bounded g, and no f mass missing from the refinement.
  for (const DensityPiece& p : f.pieces())
    for (const Vec& v : p.cell.vertices())
      if (!pw_contains(g, v)) return {kInf, DivergenceMethod::exact, 0.0};
  if (!f.bounded_support() && g.bounded_support())
    return {kInf, DivergenceMethod::exact, 0.0};

  bool truncated = false;
  double covered = refine_sum(
      f, g,
      [](const AffineForm& pf, const AffineForm&, const Polytope& cell) {
        return exp_integral(cell, pf);
      },
      &truncated);
  if (covered < 1.0 - 1e-9) return {kInf, DivergenceMethod::exact, 0.0};

  double val = refine_sum(
      f, g,
      [](const AffineForm& pf, const AffineForm& qf, const Polytope& cell) {
        Vec da = pf.alpha - qf.alpha;
        double db = pf.beta - qf.beta;
        double term = db * exp_integral(cell, pf);
        if (norm(da) > 0.0) term += dot(da, exp_moment(cell, pf));
        return term;
      },
      &truncated);
  out.value = std::max(0.0, val);
  out.error = truncated ? 1e-12 : 0.0;
  return out;
}

// One piecewise side with bounded support against a smooth density:
// adaptive quadrature over the piecewise cells (sqrt(f g) and f log(f/g)
// vanish off the piecewise support).
ValErr quad_sqrt_mass(const Density& pwd, const Density& sm) {
  double s = 0.0;
  for (const DensityPiece& p : pwd.piecewise_form().pieces())
    s += integrate_polytope(
        p.cell,
        [&](const Vec& x) {
          double lg = sm.log_evaluate(x);
          if (!(lg > -kInf)) return 0.0;
          return std::exp(0.5 * (p.form.eval(x) + lg));
        },
        1e-10, 14);
  return {s, DivergenceMethod::quadrature, 0.0};
}

ValErr quad_kl(const Density& fd, const Density& g) {
  const LogKAffineDensity& f = fd.piecewise_form();
  // Cells are convex, so finite log g at every vertex bounds log g on the
  // whole cell away from -inf.
  for (const DensityPiece& p : f.pieces())
    for (const Vec& v : p.cell.vertices())
      if (!(g.log_evaluate(v) > -kInf))
        return {kInf, DivergenceMethod::quadrature, 0.0};
  double s = 0.0;
  for (const DensityPiece& p : f.pieces())
    s += integrate_polytope(
        p.cell,
        [&](const Vec& x) {
          double lf = p.form.eval(x);
          return std::exp(lf) * (lf - g.log_evaluate(x));
        },
        1e-10, 14);
  return {std::max(0.0, s), DivergenceMethod::quadrature,
          1e-9 * std::max(1.0, std::fabs(s))};
}

struct McMean {
  double mean = 0.0, se = 0.0;
  bool hit_zero = false;  // some term had g = 0
};

template <class Term>
McMean mc_mean(const Density& src, Term term) {
  Sample s = src.sample(kMcSamples, kMcSeed);
  double sum = 0.0, sumsq = 0.0;
  McMean out;
  for (const Vec& x : s.points) {
    double t = term(x);
    if (std::isinf(t)) {
      out.hit_zero = true;
      return out;
    }
    sum += t;
    sumsq += t * t;
  }
  const double n = static_cast<double>(kMcSamples);
  out.mean = sum / n;
  double var = std::max(0.0, sumsq / n - out.mean * out.mean);
  out.se = std::sqrt(var / n);
  return out;
}

ValErr mc_sqrt_mass(const Density& f, const Density& g) {
  const Density& a = density_key(f) <= density_key(g) ? f : g;
  const Density& b = (&a == &f) ? g : f;
  McMean m = mc_mean(a, [&](const Vec& x) {
    double lb = b.log_evaluate(x), la = a.log_evaluate(x);
    if (!(lb > -kInf) || !(la > -kInf)) return 0.0;
    return std::exp(0.5 * (lb - la));
  });
  return {m.mean, DivergenceMethod::monte_carlo, 3.0 * m.se};
}

ValErr mc_kl(const Density& f, const Density& g) {
  McMean m = mc_mean(f, [&](const Vec& x) {
    double lg = g.log_evaluate(x);
    if (!(lg > -kInf)) return kInf;
    return f.log_evaluate(x) - lg;
  });
  if (m.hit_zero) return {kInf, DivergenceMethod::monte_carlo, 0.0};
  return {std::max(0.0, m.mean), DivergenceMethod::monte_carlo, 3.0 * m.se};
}

void require_same_dim(const Density& f, const Density& g, const char* op) {
  if (f.dim() != g.dim())
    throw DegenerateInput(std::string(op) + ": dimension mismatch");
}

ValErr hellinger_impl(const Density& f, const Density& g) {
  require_same_dim(f, g, "hellinger_sq");
  ValErr s;
  if (f.has_piecewise_form() && g.has_piecewise_form()) {
    const Density& a = density_key(f) <= density_key(g) ? f : g;
    const Density& b = (&a == &f) ? g : f;
    bool truncated = false;
    s.value = exact_sqrt_mass(a.piecewise_form(), b.piecewise_form(), &truncated);
    s.method = DivergenceMethod::exact;
    s.error = truncated ? 1e-12 : 0.0;
  } else if (f.has_piecewise_form() && f.piecewise_form().bounded_support()) {
    s = quad_sqrt_mass(f, g);
    s.error = 1e-9 * std::max(1.0, s.value);
  } else if (g.has_piecewise_form() && g.piecewise_form().bounded_support()) {
    s = quad_sqrt_mass(g, f);
    s.error = 1e-9 * std::max(1.0, s.value);
  } else {
    s = mc_sqrt_mass(f, g);
    s.error *= 2.0;  // d_H^2 = 2 - 2 * the estimated integral
  }
  s.value = std::min(2.0, std::max(0.0, 2.0 - 2.0 * s.value));
  return s;
}

ValErr kl_impl(const Density& f, const Density& g) {
  require_same_dim(f, g, "kl");
  if (!bounded_support(f) && bounded_support(g))
    return {kInf, DivergenceMethod::exact, 0.0};
  if (f.has_piecewise_form() && g.has_piecewise_form()) return exact_kl(f, g);
  if (f.has_piecewise_form() && f.piecewise_form().bounded_support() &&
      !g.has_piecewise_form())
    return quad_kl(f, g);
  return mc_kl(f, g);
}

}  // namespace

std::string divergence_method_name(DivergenceMethod m) {
  switch (m) {
    case DivergenceMethod::exact:
      return "exact";
    case DivergenceMethod::quadrature:
      return "quadrature";
    default:
      return "monte_carlo";
  }
}

double hellinger_sq(const Density& f, const Density& g) {
  return hellinger_impl(f, g).value;
}

double kl(const Density& f, const Density& g) { return kl_impl(f, g).value; }

double dx_sq(const Density& f_hat, const Density& f0, const std::vector<Vec>& points) {
  if (points.empty()) throw DegenerateInput("dx_sq: empty sample");
  require_same_dim(f_hat, f0, "dx_sq");
  double sum = 0.0;
  for (const Vec& x : points) {
    double l0 = f0.log_evaluate(x);
    if (!(l0 > -kInf))
      throw InvalidSample("dx_sq: sample point outside the support of f0");
    double lh = f_hat.log_evaluate(x);
    if (!(lh > -kInf)) return -kInf;
    sum += lh - l0;
  }
  return sum / static_cast<double>(points.size());
}

double dx_sq(const Density& f_hat, const Density& f0, const Sample& sample) {
  return dx_sq(f_hat, f0, sample.points);
}

DivergenceReport divergence_report(const Density& f, const Density& g) {
  ValErr h = hellinger_impl(f, g);
  ValErr k = kl_impl(f, g);
  DivergenceReport r;
  r.hellinger_sq = h.value;
  r.kl = k.value;
  r.method = std::max(h.method, k.method);
  r.error_estimate = std::max(h.error, k.error);
  return r;
}

DivergenceReport divergence_report(const Density& f, const Density& g,
                                   const std::vector<Vec>& points) {
  DivergenceReport r = divergence_report(f, g);
  r.dx_sq = dx_sq(f, g, points);
  r.has_dx = true;
  return r;
}

}  // namespace lcde
