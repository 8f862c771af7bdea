#include "lcde/integrals.hpp"

#include <algorithm>

namespace lcde {

namespace {

constexpr double kClusterWidth = 1e-4;

double factorial(int n) {
  double f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Centered series for the divided difference of exp over nodes x_0..x_{m-1}
// with small spread: DD = e^mu Σ_{k>=0} h_k(c) / (m-1+k)! where c = x - mu
// and h_k is the complete homogeneous symmetric polynomial. Valid for any
// node multiplicities.
double dd_series(const double* x, int m) {
  double mu = 0;
  for (int i = 0; i < m; ++i) mu += x[i];
  mu /= m;
  double c[8];
  for (int i = 0; i < m; ++i) c[i] = x[i] - mu;

  // h_k via the prefix recurrence; kmax terms are plenty for spread < 1e-4.
  const int kmax = 12;
  double h[16];
  h[0] = 1.0;
  for (int k = 1; k <= kmax; ++k) h[k] = 0.0;
  for (int j = 0; j < m; ++j)
    for (int k = 1; k <= kmax; ++k) h[k] += c[j] * h[k - 1];

  double invf = 1.0 / factorial(m - 1);
  double sum = 0;
  for (int k = 0; k <= kmax; ++k) {
    sum += h[k] * invf;
    invf /= (m + k);
  }
  return std::exp(mu) * sum;
}

}  // namespace

double exp_divdiff(const double* nodes, int count) {
  if (count < 1 || count > 6) throw OutOfRange("exp_divdiff: 1..6 nodes");
  double x[6];
  for (int i = 0; i < count; ++i) x[i] = nodes[i];
  std::sort(x, x + count);

  // Shift so the largest node is 0; undo at the end (DD[e^t] scales by e^s).
  const double shift = x[count - 1];
  for (int i = 0; i < count; ++i) x[i] -= shift;

  double tab[6][6];
  for (int i = 0; i < count; ++i) tab[i][i] = std::exp(x[i]);
  for (int len = 1; len < count; ++len) {
    for (int i = 0; i + len < count; ++i) {
      int j = i + len;
      double w = x[j] - x[i];
      if (w < kClusterWidth) {
        tab[i][j] = dd_series(x + i, len + 1);
      } else {
        tab[i][j] = (tab[i + 1][j] - tab[i][j - 1]) / w;
      }
    }
  }
  return tab[0][count - 1] * std::exp(shift);
}

double exp_affine_integral(const Simplex& s, const AffineForm& f) {
  // beta rides inside the nodes (DD[exp] at nodes+beta = e^beta DD at nodes):
  // the nodes are then the actual vertex values of the form, so slivers with
  // huge alpha compensated by beta stay on the bounded scale.
  const int d = s.d;
  double g[5] = {0, 0, 0, 0, 0};
  for (int i = 0; i <= d; ++i) g[i] = dot(f.alpha, s.v[i]) + f.beta;
  double dd = exp_divdiff(g, d + 1);
  return factorial(d) * s.volume() * dd;
}

Vec moment_exp_affine_integral(const Simplex& s, const AffineForm& f) {
  const int d = s.d;
  double g[6] = {0, 0, 0, 0, 0, 0};
  for (int i = 0; i <= d; ++i) g[i] = dot(f.alpha, s.v[i]) + f.beta;
  const double scale = factorial(d) * s.volume();
  Vec m(d);
  for (int i = 0; i <= d; ++i) {
    g[d + 1] = g[i];
    double w = scale * exp_divdiff(g, d + 2);
    for (int j = 0; j < d; ++j) m.c[j] += w * s.v[i].c[j];
  }
  return m;
}

lin::Mat second_moment_exp_affine_integral(const Simplex& s, const AffineForm& f) {
  // ∫ λ_a λ_b over the simplex gives DD[exp] with nodes g plus {g_a, g_b}
  // (doubled weight when a == b), so x x^T integrates vertex-pairwise.
  const int d = s.d;
  double g[6] = {0, 0, 0, 0, 0, 0};
  for (int i = 0; i <= d; ++i) g[i] = dot(f.alpha, s.v[i]) + f.beta;
  const double scale = factorial(d) * s.volume();
  lin::Mat m{};
  for (int a = 0; a <= d; ++a)
    for (int b = a; b <= d; ++b) {
      g[d + 1] = g[a];
      g[d + 2] = g[b];
      double w = scale * exp_divdiff(g, d + 3) * (a == b ? 2.0 : 1.0);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          m[i][j] += w * s.v[a].c[i] * s.v[b].c[j];
          if (a != b) m[i][j] += w * s.v[b].c[i] * s.v[a].c[j];
        }
    }
  return m;
}

// ---------------------------------------------------------------------------
// Polytope integrals with truncation for unbounded cells

Polytope truncate(const Polytope& k, const Vec& alpha, double t) {
  if (k.bounded()) {
    double m = dot(alpha, k.vertices()[0]);
    for (const Vec& v : k.vertices()) m = std::min(m, dot(alpha, v));
    auto r = clip(k, HalfSpace(alpha, m + t));
    if (!r) throw DegenerateInput("truncate: empty clip");
    return *r;
  }
  double m = dot(alpha, k.vertices()[0]);
  for (const Vec& v : k.vertices()) m = std::min(m, dot(alpha, v));
  const double na = norm(alpha);
  std::vector<Vec> gen = k.vertices();
  for (const Vec& r : k.rays()) {
    double ar = dot(alpha, r);
    if (ar <= 1e-12 * na * norm(r))
      throw NotIntegrable("truncate: recession ray does not increase alpha·x");
    // conv(V)+cone(R) clipped at height t lies in conv(V ∪ {v + (t/ar) r}).
    for (const Vec& v : k.vertices()) gen.push_back(v + (t / ar) * r);
  }
  Polytope envl(std::move(gen));
  auto r = clip(envl, HalfSpace(alpha, m + t));
  if (!r) throw DegenerateInput("truncate: empty clip");
  return *r;
}

namespace {

double bounded_exp_integral(const Polytope& p, const AffineForm& f) {
  double s = 0;
  for (const Simplex& t : p.triangulation()) s += exp_affine_integral(t, f);
  return s;
}

Vec bounded_exp_moment(const Polytope& p, const AffineForm& f) {
  Vec m(p.dim());
  for (const Simplex& t : p.triangulation()) m += moment_exp_affine_integral(t, f);
  return m;
}

lin::Mat bounded_exp_second_moment(const Polytope& p, const AffineForm& f) {
  lin::Mat m{};
  for (const Simplex& t : p.triangulation()) {
    lin::Mat s = second_moment_exp_affine_integral(t, f);
    for (int i = 0; i < p.dim(); ++i)
      for (int j = 0; j < p.dim(); ++j) m[i][j] += s[i][j];
  }
  return m;
}

void require_decay(const Polytope& p, const AffineForm& f) {
  const double na = norm(f.alpha);
  for (const Vec& r : p.rays())
    if (dot(f.alpha, r) >= -1e-12 * std::max(na, 1.0) * norm(r))
      throw NotIntegrable("exp_integral: form does not decay along a recession ray");
}

}  // namespace

double exp_integral(const Polytope& p, const AffineForm& f) {
  if (p.bounded()) return bounded_exp_integral(p, f);
  require_decay(p, f);
  Vec a = -1.0 * f.alpha;  // decay direction: a·x grows along rays
  double t = 10.0, prev = -1.0;
  for (int it = 0; it < 60; ++it) {
    double cur = bounded_exp_integral(truncate(p, a, t), f);
    if (prev >= 0 && std::fabs(cur - prev) <= 1e-10 * std::max(cur, 1e-300))
      return cur;
    prev = cur;
    t *= 2.0;
  }
  throw NotIntegrable("exp_integral: truncation did not converge");
}

Vec exp_moment(const Polytope& p, const AffineForm& f) {
  if (p.bounded()) return bounded_exp_moment(p, f);
  require_decay(p, f);
  Vec a = -1.0 * f.alpha;
  double t = 10.0;
  Vec prev;
  bool have_prev = false;
  for (int it = 0; it < 60; ++it) {
    Vec cur = bounded_exp_moment(truncate(p, a, t), f);
    if (have_prev) {
      double diff = 0, scl = 1e-300;
      for (int j = 0; j < cur.dim(); ++j) {
        diff = std::max(diff, std::fabs(cur.c[j] - prev.c[j]));
        scl = std::max(scl, std::fabs(cur.c[j]));
      }
      if (diff <= 1e-10 * std::max(scl, 1.0)) return cur;
    }
    prev = cur;
    have_prev = true;
    t *= 2.0;
  }
  throw NotIntegrable("exp_moment: truncation did not converge");
}

lin::Mat exp_second_moment(const Polytope& p, const AffineForm& f) {
  if (p.bounded()) return bounded_exp_second_moment(p, f);
  require_decay(p, f);
  Vec a = -1.0 * f.alpha;
  const int d = p.dim();
  double t = 10.0;
  lin::Mat prev{};
  bool have_prev = false;
  for (int it = 0; it < 60; ++it) {
    lin::Mat cur = bounded_exp_second_moment(truncate(p, a, t), f);
    if (have_prev) {
      double diff = 0, scl = 1e-300;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          diff = std::max(diff, std::fabs(cur[i][j] - prev[i][j]));
          scl = std::max(scl, std::fabs(cur[i][j]));
        }
      if (diff <= 1e-10 * std::max(scl, 1.0)) return cur;
    }
    prev = cur;
    have_prev = true;
    t *= 2.0;
  }
  throw NotIntegrable("exp_second_moment: truncation did not converge");
}

double normalizer(const Polytope& k, const Vec& alpha) {
  // Integrability: alpha strictly positive on every recession generator.
  // (That also forces the recession cone to be pointed, i.e. K line-free.)
  const double na = norm(alpha);
  for (const Vec& r : k.rays())
    if (dot(alpha, r) <= 1e-12 * std::max(na, 1.0) * norm(r))
      throw NotIntegrable("normalizer: alpha outside Int((rec K)*) or K not line-free");
  return exp_integral(k, AffineForm(-1.0 * alpha, 0.0));
}

// ---------------------------------------------------------------------------
// Slice / slab volume checks

double gamma_lower(int d, double t) {
  double term = 1.0, s = 0.0;
  for (int l = 0; l < d; ++l) {
    s += term;
    term *= t / (l + 1);
  }
  return 1.0 - std::exp(-t) * s;
}

SliceBounds slice_ratio_check(const Polytope& k, const Vec& alpha, double t) {
  SliceBounds b;
  double m = dot(alpha, k.vertices()[0]);
  for (const Vec& v : k.vertices()) m = std::min(m, dot(alpha, v));
  // c' = ∫_K exp(-(alpha·x - m)); shifting by m keeps the scale ~1.
  double c = exp_integral(k, AffineForm(-1.0 * alpha, m));
  double vol = truncate(k, alpha, t).volume();
  b.ratio = vol / c;
  b.lower = gamma_lower(k.dim(), t);
  b.upper = std::exp(t);
  b.ok = (b.ratio >= b.lower * (1 - 1e-9) && b.ratio <= b.upper * (1 + 1e-9));
  return b;
}

SlabBounds slab_ratio_check(const Polytope& k, const Vec& alpha, double s, double t) {
  if (!(s >= 1.0 && t >= s + 1.0))
    throw OutOfRange("slab_ratio_check: need 1 <= s <= t-1");
  SlabBounds b;
  const int d = k.dim();
  auto slab = [&](double u) {
    double hi = truncate(k, alpha, u).volume();
    double lo = u > 1.0 ? truncate(k, alpha, u - 1.0).volume() : 0.0;
    return hi - lo;
  };
  b.lhs = slab(t);
  double ratio = (std::pow(t, d) - std::pow(t - 1, d)) /
                 (std::pow(s, d) - std::pow(s - 1, d));
  b.rhs = ratio * slab(s);
  b.ok = b.lhs <= b.rhs * (1 + 1e-9) + 1e-12;
  return b;
}

}  // namespace lcde
