#include "lcde/invelopes.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lcde {
namespace {

// Relative slack so that boundary-lattice points (whose defining products equal
// eta exactly in real arithmetic) survive rounding.
constexpr double kSetTol = 1e-12;

double eta_cap(int d) { return std::ldexp(1.0, -d); }

void check_eta(double eta, int d, double cap, const char* where) {
  if (d < 1 || d > 3) throw OutOfRange(std::string(where) + ": dim must be in {1,2,3}");
  if (!(eta > 0.0) || eta > cap * (1.0 + kSetTol))
    throw OutOfRange(std::string(where) + ": eta outside the admissible interval");
}

// Piecewise-affine decreasing profile interpolating (eta/z)^{1/(d-1)} at the
// dyadic knots z_k = 2^{(d-1)k} eta^{1/d}, where its value is
// w_k = 2^{-k} eta^{1/d}. Bijection (0,inf) -> (0,inf); band j carries
// profile values [w_j, w_{j-1}] over arguments [z_{j-1}, z_j].
struct Profile {
  double root = 0.0;  // eta^{1/d}
  int d = 0;          // ambient dimension (profile feeds the last coordinate)

  double wk(int k) const { return std::ldexp(root, -k); }
  double zk(int k) const { return std::ldexp(root, (d - 1) * k); }

  double eval(double z) const {
    int j = static_cast<int>(std::ceil(std::log2(z / root) / (d - 1) - 1e-12));
    double z0 = zk(j - 1), z1 = zk(j);
    double t = (z - z0) / (z1 - z0);
    return wk(j - 1) + t * (wk(j) - wk(j - 1));
  }
  int band(double w) const {
    return static_cast<int>(std::ceil(-std::log2(w / root) - 1e-12));
  }
  // Affine inverse within band j; exact at the knots.
  double band_z(int j, double w) const {
    double w0 = wk(j - 1), w1 = wk(j);
    double t = (w - w0) / (w1 - w0);
    return zk(j - 1) + t * (zk(j) - zk(j - 1));
  }
  double inverse(double w) const { return band_z(band(w), w); }
};

// Gauge (support-scaling function) of the recursive epigraph set E_d at eta=1:
// gauge(x) = sup{ lam : x in lam * E_d }, positively homogeneous; E_1 = [1,inf).
// d=2: the boundary polyline has vertices v_j = (2^{-j}, 2^j); inside the cone
// spanned by v_{j-1}, v_j the gauge is the affine form (2^j x1 + 2^{1-j} x2)/3.
double gauge2(double x1, double x2) {
  if (x1 <= 0.0 || x2 <= 0.0) return 0.0;
  int j = static_cast<int>(std::ceil(0.5 * std::log2(x2 / x1) - 1e-12));
  return (std::ldexp(x1, j) + std::ldexp(x2, 1 - j)) / 3.0;
}

// d=3: on the slab where z / gauge2(x) lies in [8^{j-1}, 8^j] the unit profile
// piece gives gauge = 2^j (3 gauge2(x) + 4 z 8^{-j}) / 7.
double gauge3(double x1, double x2, double z) {
  double t = gauge2(x1, x2);
  if (t <= 0.0 || z <= 0.0) return 0.0;
  int j = static_cast<int>(std::ceil(std::log2(z / t) / 3.0 - 1e-12));
  return std::ldexp(3.0 * t + 4.0 * std::ldexp(z, -3 * j), j) / 7.0;
}

double gauge(const Vec& u, int d) {
  if (d == 1) return u[0] > 0.0 ? u[0] : 0.0;
  if (d == 2) return gauge2(u[0], u[1]);
  return gauge3(u[0], u[1], u[2]);
}

Vec folded(const Vec& x) {
  Vec m(x.dim());
  for (int i = 0; i < x.dim(); ++i) m[i] = std::min(x[i], 1.0 - x[i]);
  return m;
}

std::vector<Vec> dedup(std::vector<Vec> pts, double tol) {
  std::vector<Vec> out;
  for (const Vec& p : pts) {
    bool seen = false;
    for (const Vec& q : out)
      if (dist(p, q) <= tol) {
        seen = true;
        break;
      }
    if (!seen) out.push_back(p);
  }
  return out;
}

void add_reflections(const std::vector<Vec>& base, int d, std::vector<Vec>* out) {
  for (const Vec& p : base)
    for (int mask = 0; mask < (1 << d); ++mask) {
      Vec q = p;
      for (int i = 0; i < d; ++i)
        if (mask & (1 << i)) q[i] = 1.0 - q[i];
      out->push_back(q);
    }
}

Vec reflect_point(const Vec& p, int mask, int d) {
  Vec q = p;
  for (int i = 0; i < d; ++i)
    if (mask & (1 << i)) q[i] = 1.0 - q[i];
  return q;
}

// Boundary chain of [0,1/2]^2 \cap L_{2,eta}: wall exit (1/2, h(1/2)), the
// dyadic knots (w_j, z_j) with both coordinates below 1/2, top exit
// (h(1/2), 1/2). Collapses to the single corner (1/2,1/2) at eta = 1/4.
std::vector<Vec> chain2(double eta) {
  double root = std::sqrt(eta);
  Profile h{root, 2};
  double hc = h.eval(0.5);
  int jmax = static_cast<int>(std::floor(std::log2(0.5 / root) + 1e-9));
  std::vector<Vec> out;
  out.push_back(Vec{0.5, hc});
  for (int j = -jmax; j <= jmax; ++j) out.push_back(Vec{h.wk(j), h.zk(j)});
  out.push_back(Vec{hc, 0.5});
  return dedup(std::move(out), 1e-12);
}

// ---- d=3 cell machinery -----------------------------------------------------
// The graph z = g(x) of the last coordinate over the quarter square is affine
// on each "cell" = (gauge2 cone) x (gauge2 band between consecutive cut
// values), so cells are clipped convex polygons and everything downstream
// (vertex lattice, exact volumes, shell prisms) reduces to affine data.

double cone_lambda(int m, const Vec& x) {
  return (std::ldexp(x[0], m) + std::ldexp(x[1], 1 - m)) / 3.0;
}

std::optional<Polytope> cone_band_cell(const Polytope& sq, int m, double la,
                                       double lb) {
  std::vector<HalfSpace> hs;
  // x2/x1 >= 4^{m-1} and x2/x1 <= 4^m select the cone.
  hs.emplace_back(Vec{std::ldexp(1.0, m - 1), -std::ldexp(1.0, 1 - m)}, 0.0);
  hs.emplace_back(Vec{-std::ldexp(1.0, m), std::ldexp(1.0, -m)}, 0.0);
  Vec grad{std::ldexp(1.0, m) / 3.0, std::ldexp(1.0, 1 - m) / 3.0};
  hs.emplace_back(grad, lb);
  hs.emplace_back(Vec{-grad[0], -grad[1]}, -la);
  return intersect(sq, hs);
}

// Sorted gauge cut values spanning [lam_lo, 1/2]: lam_lo itself, every
// contributing profile's knots above its own floor, any extra marks, and 1/2.
std::vector<double> gauge_breaks(
    double lam_lo, const std::vector<std::pair<const Profile*, double>>& items,
    const std::vector<double>& extra) {
  std::vector<double> v{lam_lo, 0.5};
  for (const auto& [h, floor_w] : items) {
    double lo = std::max(lam_lo, floor_w);
    for (int j = h->band(0.5) - 1; j <= h->band(lo) + 1; ++j) {
      double w = h->wk(j);
      if (w > lo * (1.0 + 1e-13) && w < 0.5 * (1.0 - 1e-13)) v.push_back(w);
    }
  }
  for (double e : extra)
    if (e > lam_lo * (1.0 + 1e-13) && e < 0.5 * (1.0 - 1e-13)) v.push_back(e);
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double w : v)
    if (out.empty() || w - out.back() > 1e-14 * w) out.push_back(w);
  return out;
}

// Upper bound on the cone indices meeting {x in [0,1/2]^2 : gauge2 >= lam_lo}:
// the smallest first coordinate in that region sits on the wall x2 = 1/2.
int cone_range(double lam_lo) {
  Profile unit{1.0, 2};
  double x1min = lam_lo * unit.eval(0.5 / lam_lo);
  int m = static_cast<int>(std::ceil(0.5 * std::log2(0.5 / x1min))) + 2;
  return std::min(std::max(m, 2), 80);
}

template <class F>
void for_each_cell3(const std::vector<double>& breaks, F&& f) {
  Polytope sq(
      std::vector<Vec>{Vec{0.0, 0.0}, Vec{0.5, 0.0}, Vec{0.5, 0.5}, Vec{0.0, 0.5}});
  int mr = cone_range(breaks.front());
  for (int m = -mr; m <= mr; ++m)
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
      double la = breaks[i], lb = breaks[i + 1];
      if (lb - la <= 1e-15 * lb) continue;
      std::optional<Polytope> cell = cone_band_cell(sq, m, la, lb);
      if (cell) f(m, la, lb, *cell);
    }
}

std::vector<Vec> base3(const Profile& h) {
  double rim = h.eval(0.5);
  std::vector<double> breaks = gauge_breaks(rim, {{&h, 0.0}}, {});
  std::vector<Vec> out;
  for_each_cell3(breaks, [&](int m, double la, double lb, const Polytope& cell) {
    int j = h.band(std::sqrt(la * lb));
    for (const Vec& v : cell.vertices())
      out.push_back(Vec{v[0], v[1], h.band_z(j, cone_lambda(m, v))});
  });
  return out;
}

double quarter_area2(double eta) {
  std::vector<Vec> poly{Vec{0.5, 0.5}};
  std::vector<Vec> ch = chain2(eta);
  poly.insert(poly.end(), ch.begin(), ch.end());
  double s = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec& a = poly[i];
    const Vec& b = poly[(i + 1) % poly.size()];
    s += a[0] * b[1] - b[0] * a[1];
  }
  return std::abs(s) / 2.0;
}

double quarter_volume3(const Profile& h) {
  double rim = h.eval(0.5);
  std::vector<double> breaks = gauge_breaks(rim, {{&h, 0.0}}, {});
  double vol = 0.0;
  for_each_cell3(breaks, [&](int m, double la, double lb, const Polytope& cell) {
    int j = h.band(std::sqrt(la * lb));
    for (const Simplex& t : cell.triangulation()) {
      Vec c = t.centroid();
      vol += t.volume() * (0.5 - h.band_z(j, cone_lambda(m, c)));
    }
  });
  return vol;
}

void push_simplex(std::vector<Simplex>* out, const Simplex& s) {
  if (s.volume() > 1e-18) out->push_back(s);
}

// Staircase split of the vertical prism between two affine graphs over a base
// triangle. The base vertices must already follow a globally consistent order
// so that shared walls between neighbouring prisms receive the same diagonal.
void emit_prism(std::vector<Simplex>* out, const Vec b[3], const Vec t[3]) {
  push_simplex(out, Simplex{b[0], b[1], b[2], t[0]});
  push_simplex(out, Simplex{b[1], b[2], t[0], t[1]});
  push_simplex(out, Simplex{b[2], t[0], t[1], t[2]});
}

bool lex_less(const Vec& a, const Vec& b) {
  if (std::abs(a[0] - b[0]) > 1e-13) return a[0] < b[0];
  return a[1] < b[1];
}

}  // namespace

Invelope make_invelope(double eta, int d) {
  check_eta(eta, d, eta_cap(d), "make_invelope");
  return Invelope{eta, d};
}

bool invelope_contains(const Invelope& J, const Vec& x) {
  if (x.dim() != J.dim) throw DegenerateInput("invelope_contains: dimension mismatch");
  double p = 1.0;
  for (int i = 0; i < J.dim; ++i) {
    if (x[i] < 0.0 || x[i] > 1.0) return false;
    p *= std::min(x[i], 1.0 - x[i]);
  }
  return p >= J.eta * (1.0 - kSetTol);
}

double complement_volume(const Invelope& J) {
  check_eta(J.eta, J.dim, eta_cap(J.dim), "complement_volume");
  double lg = std::log(eta_cap(J.dim) / J.eta);
  if (lg < 0.0) lg = 0.0;  // eta within rounding of the cap
  double sum = 0.0, term = 1.0;
  for (int l = 0; l < J.dim; ++l) {
    sum += term;
    term *= lg / (l + 1);
  }
  return std::ldexp(J.eta, J.dim) * sum;
}

InvelopePolytope build_P(double eta, int d) {
  if (d != 2 && d != 3) throw OutOfRange("build_P: dim must be 2 or 3");
  check_eta(eta, d, eta_cap(d), "build_P");
  InvelopePolytope out;
  out.eta = eta;
  out.dim = d;
  std::vector<Vec> base;
  if (d == 2) {
    base = chain2(eta);
  } else {
    Profile h{std::cbrt(eta), 3};
    base = base3(h);
  }
  std::vector<Vec> all;
  add_reflections(base, d, &all);
  all = dedup(std::move(all), 1e-12);
  if (all.size() <= 1) {
    Vec c(d);
    for (int i = 0; i < d; ++i) c[i] = 0.5;
    out.vertices = {c};
    out.vertex_count = 1;
    out.degenerate = true;
    return out;
  }
  out.polytope = Polytope(std::move(all));
  out.vertices = out.polytope.vertices();
  out.vertex_count = static_cast<int>(out.vertices.size());
  return out;
}

bool invelope_polytope_contains(const InvelopePolytope& P, const Vec& x) {
  if (x.dim() != P.dim)
    throw DegenerateInput("invelope_polytope_contains: dimension mismatch");
  if (P.degenerate) {
    for (int i = 0; i < P.dim; ++i)
      if (std::abs(x[i] - 0.5) > 1e-12) return false;
    return true;
  }
  for (int i = 0; i < P.dim; ++i)
    if (x[i] < -kSetTol || x[i] > 1.0 + kSetTol) return false;
  double root = P.dim == 2 ? std::sqrt(P.eta) : std::cbrt(P.eta);
  return gauge(folded(x), P.dim) >= root * (1.0 - kSetTol);
}

double invelope_polytope_volume(const InvelopePolytope& P) {
  if (P.degenerate) return 0.0;
  if (P.dim == 2) return 4.0 * quarter_area2(P.eta);
  Profile h{std::cbrt(P.eta), 3};
  return 8.0 * quarter_volume3(h);
}

std::vector<Simplex> shell_triangulation(const InvelopePolytope& outer,
                                         const InvelopePolytope& inner) {
  if (outer.dim != inner.dim || !(outer.eta < inner.eta) || outer.degenerate)
    throw NotNested(
        "shell_triangulation: inner set must come from a strictly larger eta "
        "in the same dimension");
  std::vector<Simplex> tris;
  int d = outer.dim;

  if (d == 2) {
    if (inner.degenerate) {
      // Fan over the outer polygon: one triangle per vertex.
      Vec c{0.5, 0.5};
      std::vector<Vec> vs = outer.vertices;
      std::sort(vs.begin(), vs.end(), [&](const Vec& a, const Vec& b) {
        return std::atan2(a[1] - 0.5, a[0] - 0.5) <
               std::atan2(b[1] - 0.5, b[0] - 0.5);
      });
      for (std::size_t i = 0; i < vs.size(); ++i)
        push_simplex(&tris, Simplex{c, vs[i], vs[(i + 1) % vs.size()]});
      return tris;
    }
    Profile ho{std::sqrt(outer.eta), 2}, hi{std::sqrt(inner.eta), 2};
    double xo = ho.eval(0.5), xi = hi.eval(0.5);
    std::vector<double> breaks = gauge_breaks(xo, {{&ho, 0.0}, {&hi, xi}}, {xi});
    std::vector<Simplex> quarter;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
      double xa = breaks[i], xb = breaks[i + 1];
      if (xb - xa <= 1e-15 * xb) continue;
      bool graph_top = xa >= xi * (1.0 - 1e-13);
      double ba = ho.inverse(xa), bb = ho.inverse(xb);
      double ta = graph_top ? hi.inverse(xa) : 0.5;
      double tb = graph_top ? hi.inverse(xb) : 0.5;
      push_simplex(&quarter, Simplex{Vec{xa, ba}, Vec{xb, bb}, Vec{xb, tb}});
      push_simplex(&quarter, Simplex{Vec{xa, ba}, Vec{xb, tb}, Vec{xa, ta}});
    }
    for (const Simplex& s : quarter)
      for (int mask = 0; mask < 4; ++mask)
        push_simplex(&tris, Simplex{reflect_point(s.v[0], mask, 2),
                                    reflect_point(s.v[1], mask, 2),
                                    reflect_point(s.v[2], mask, 2)});
    return tris;
  }

  Profile ho{std::cbrt(outer.eta), 3}, hi{std::cbrt(inner.eta), 3};
  double rim_o = ho.eval(0.5), rim_i = hi.eval(0.5);
  std::vector<double> breaks =
      gauge_breaks(rim_o, {{&ho, 0.0}, {&hi, rim_i}}, {rim_i});
  std::vector<Simplex> quarter;
  for_each_cell3(breaks, [&](int m, double la, double lb, const Polytope& cell) {
    double lg = std::sqrt(la * lb);
    int jo = ho.band(lg);
    bool graph_top = la >= rim_i * (1.0 - 1e-13);
    int ji = graph_top ? hi.band(lg) : 0;
    for (const Simplex& t : cell.triangulation()) {
      std::array<Vec, 3> base{t.v[0], t.v[1], t.v[2]};
      std::sort(base.begin(), base.end(), lex_less);
      Vec b[3], tp[3];
      for (int k = 0; k < 3; ++k) {
        double lam = cone_lambda(m, base[k]);
        double zb = ho.band_z(jo, lam);
        double zt = graph_top ? hi.band_z(ji, lam) : 0.5;
        b[k] = Vec{base[k][0], base[k][1], zb};
        tp[k] = Vec{base[k][0], base[k][1], zt};
      }
      emit_prism(&quarter, b, tp);
    }
  });
  for (const Simplex& s : quarter)
    for (int mask = 0; mask < 8; ++mask)
      push_simplex(&tris, Simplex{reflect_point(s.v[0], mask, 3),
                                  reflect_point(s.v[1], mask, 3),
                                  reflect_point(s.v[2], mask, 3),
                                  reflect_point(s.v[3], mask, 3)});
  return tris;
}

SimplexInvelope simplex_invelope(double eta, int d) {
  double cap = std::pow(d + 1.0, -static_cast<double>(d));
  check_eta(eta, d, cap, "simplex_invelope");
  SimplexInvelope s;
  s.eta = eta;
  s.dim = d;
  return s;
}

bool SimplexInvelope::contains(const Vec& bary) const {
  if (bary.dim() != dim + 1)
    throw DegenerateInput("SimplexInvelope::contains: need d+1 coordinates");
  for (int i = 0; i <= dim; ++i)
    if (bary[i] < 0.0) return false;
  for (int j = 0; j <= dim; ++j) {
    double p = 1.0;
    for (int l = 0; l <= dim; ++l)
      if (l != j) p *= bary[l];
    if (p < eta * (1.0 - kSetTol)) return false;
  }
  return true;
}

bool SimplexInvelope::contains_projected(const Vec& y) const {
  if (y.dim() != dim)
    throw DegenerateInput("SimplexInvelope::contains_projected: need d coordinates");
  double s = 0.0, mx = 0.0;
  for (int i = 0; i < dim; ++i) {
    if (y[i] < 0.0) return false;
    s += y[i];
    mx = std::max(mx, y[i]);
  }
  double last = 1.0 - s;
  if (last < 0.0 || last < mx) return false;
  Vec b(dim + 1);
  for (int i = 0; i < dim; ++i) b[i] = y[i];
  b[dim] = last;
  return contains(b);
}

}  // namespace lcde
