#include "lcde/densities.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "lcde/quadrature.hpp"

namespace lcde {

namespace {

constexpr double kFormTol = 1e-9;
constexpr double kPi = 3.14159265358979323846;

double unit_ball_volume(int d) {
  switch (d) {
    case 1: return 2.0;
    case 2: return kPi;
    case 3: return 4.0 * kPi / 3.0;
    default: throw OutOfRange("unit_ball_volume: d must be 1..3");
  }
}

double sphere_area(int d) { return d * unit_ball_volume(d); }

Vec embed(const Vec& v, int d) {
  Vec out(d);
  for (int i = 0; i < v.d; ++i) out.c[i] = v.c[i];
  return out;
}

Vec unit_axis(int d, int axis) {
  Vec e(d);
  e.c[axis] = 1.0;
  return e;
}

double coord_scale(const Polytope& p) {
  double s = 1.0;
  for (const Vec& v : p.vertices())
    for (int i = 0; i < p.dim(); ++i) s = std::max(s, std::fabs(v.c[i]));
  return s;
}

// Bounded stand-in for a possibly unbounded cell, used for probe sampling.
// Prefers the decay direction of the piece's own form.
Polytope probe_window(const DensityPiece& piece, double depth = 25.0) {
  if (piece.cell.bounded()) return piece.cell;
  Vec a = -1.0 * piece.form.alpha;
  bool ok = true;
  for (const Vec& r : piece.cell.rays())
    if (dot(a, r) <= 1e-12 * std::max(1.0, norm(a)) * norm(r)) ok = false;
  if (!ok) {
    a = Vec(piece.cell.dim());
    for (const Vec& r : piece.cell.rays()) a += (1.0 / norm(r)) * r;
  }
  return truncate(piece.cell, a, depth);
}

}  // namespace

// ---------------------------------------------------------------------------
// LogKAffineDensity

LogKAffineDensity::LogKAffineDensity(std::vector<DensityPiece> pieces)
    : pieces_(std::move(pieces)) {
  if (pieces_.empty()) throw DegenerateInput("LogKAffineDensity: no pieces");
  dim_ = pieces_[0].cell.dim();
  for (const DensityPiece& p : pieces_) {
    if (p.cell.dim() != dim_ || p.form.alpha.dim() != dim_)
      throw DegenerateInput("LogKAffineDensity: mixed dimensions");
    if (!std::isfinite(p.form.beta)) throw DegenerateInput("LogKAffineDensity: non-finite intercept");
  }
}

long long LogKAffineDensity::gamma() const {
  long long g = 0;
  for (const DensityPiece& p : pieces_) g += p.cell.facet_count();
  return g;
}

Subdivision LogKAffineDensity::subdivision() const {
  Subdivision s;
  for (const DensityPiece& p : pieces_) s.cells.push_back(p.cell);
  return s;
}

bool LogKAffineDensity::bounded_support() const {
  for (const DensityPiece& p : pieces_)
    if (!p.cell.bounded()) return false;
  return true;
}

int LogKAffineDensity::support_facet_count() const {
  if (pieces_.size() == 1) return pieces_[0].cell.facet_count();
  if (bounded_support()) {
    std::vector<Vec> verts;
    for (const DensityPiece& p : pieces_)
      for (const Vec& v : p.cell.vertices()) verts.push_back(v);
    return Polytope(std::move(verts)).facet_count();
  }
  // A cell halfspace is a support facet iff every generator of every cell
  // satisfies it; count those, deduplicated.
  double scale = 1.0;
  for (const DensityPiece& p : pieces_) scale = std::max(scale, coord_scale(p.cell));
  const double tol = 1e-9 * scale;
  std::vector<HalfSpace> kept;
  for (const DensityPiece& p : pieces_) {
    for (const HalfSpace& h : p.cell.facets()) {
      bool valid = true;
      for (const DensityPiece& q : pieces_) {
        for (const Vec& v : q.cell.vertices())
          if (h.eval(v) > tol) { valid = false; break; }
        if (valid)
          for (const Vec& r : q.cell.rays())
            if (dot(h.normal, r) > tol * norm(r)) { valid = false; break; }
        if (!valid) break;
      }
      if (!valid) continue;
      bool dup = false;
      for (const HalfSpace& k : kept) {
        double nn = norm(h.normal) * norm(k.normal);
        if (dot(h.normal, k.normal) >= nn * (1 - 1e-10) &&
            std::fabs(h.offset / norm(h.normal) - k.offset / norm(k.normal)) <= tol)
          dup = true;
      }
      if (!dup) kept.push_back(h);
    }
  }
  return static_cast<int>(kept.size());
}

int LogKAffineDensity::find_cell(const Vec& x) const {
  for (size_t j = 0; j < pieces_.size(); ++j)
    if (pieces_[j].cell.contains(x)) return static_cast<int>(j);
  return -1;
}

double LogKAffineDensity::log_evaluate(const Vec& x) const {
  int j = find_cell(x);
  if (j < 0) return -std::numeric_limits<double>::infinity();
  return pieces_[j].form.eval(x);
}

double LogKAffineDensity::evaluate(const Vec& x) const {
  int j = find_cell(x);
  if (j < 0) return 0.0;
  return std::exp(pieces_[j].form.eval(x));
}

double LogKAffineDensity::total_mass() const {
  double m = 0;
  for (const DensityPiece& p : pieces_) m += exp_integral(p.cell, p.form);
  return m;
}

void LogKAffineDensity::normalize() {
  double m = total_mass();
  if (!(m > 0) || !std::isfinite(m))
    throw NotIntegrable("LogKAffineDensity::normalize: non-finite mass");
  double shift = std::log(m);
  for (DensityPiece& p : pieces_) p.form.beta -= shift;
}

// ---------------------------------------------------------------------------
// Minimal representation

namespace {

bool same_form(const AffineForm& a, const AffineForm& b) {
  double scale = std::max(1.0, std::max(norm(a.alpha), norm(b.alpha)));
  for (int i = 0; i < a.alpha.dim(); ++i)
    if (std::fabs(a.alpha.c[i] - b.alpha.c[i]) > kFormTol * scale) return false;
  return std::fabs(a.beta - b.beta) <=
         kFormTol * std::max({1.0, std::fabs(a.beta), std::fabs(b.beta)});
}

DensityPiece merge_group(const std::vector<const DensityPiece*>& group) {
  if (group.size() == 1) return *group[0];
  bool all_bounded = true;
  for (const DensityPiece* p : group)
    if (!p->cell.bounded()) all_bounded = false;

  double scale = 1.0;
  for (const DensityPiece* p : group) scale = std::max(scale, coord_scale(p->cell));
  const double tol = 1e-9 * scale;

  std::vector<Vec> verts;
  for (const DensityPiece* p : group)
    for (const Vec& v : p->cell.vertices()) {
      bool dup = false;
      for (const Vec& w : verts)
        if (dist(v, w) <= tol) dup = true;
      if (!dup) verts.push_back(v);
    }

  if (all_bounded) {
    double member_vol = 0;
    for (const DensityPiece* p : group) member_vol += p->cell.volume();
    Polytope merged(std::move(verts));
    if (!close_rel(merged.volume(), member_vol, 1e-9))
      throw NotConcave("minimal_representation: same-form cells have a non-convex union");
    return DensityPiece(group[0]->form, std::move(merged));
  }

  std::vector<Vec> rays;
  for (const DensityPiece* p : group)
    for (const Vec& r : p->cell.rays()) {
      Vec u = (1.0 / norm(r)) * r;
      bool dup = false;
      for (const Vec& s : rays)
        if (dist(u, (1.0 / norm(s)) * s) <= 1e-12) dup = true;
      if (!dup) rays.push_back(r);
    }
  // Keep the member halfspaces valid for every generator of the union.
  std::vector<HalfSpace> kept;
  for (const DensityPiece* p : group) {
    for (const HalfSpace& h : p->cell.facets()) {
      bool valid = true;
      for (const Vec& v : verts)
        if (h.eval(v) > tol) valid = false;
      for (const Vec& r : rays)
        if (dot(h.normal, r) > tol * norm(r)) valid = false;
      if (!valid) continue;
      bool dup = false;
      for (const HalfSpace& k : kept)
        if (dot(h.normal, k.normal) >= norm(h.normal) * norm(k.normal) * (1 - 1e-10) &&
            std::fabs(h.offset / norm(h.normal) - k.offset / norm(k.normal)) <= tol)
          dup = true;
      if (!dup) kept.push_back(h);
    }
  }
  return DensityPiece(group[0]->form, Polytope(std::move(verts), std::move(rays), std::move(kept)));
}

}  // namespace

LogKAffineDensity minimal_representation(const LogKAffineDensity& f) {
  const auto& pieces = f.pieces();
  std::vector<std::vector<const DensityPiece*>> groups;
  for (const DensityPiece& p : pieces) {
    bool placed = false;
    for (auto& g : groups)
      if (same_form(g[0]->form, p.form)) {
        g.push_back(&p);
        placed = true;
        break;
      }
    if (!placed) groups.push_back({&p});
  }

  std::vector<DensityPiece> merged;
  merged.reserve(groups.size());
  for (const auto& g : groups) merged.push_back(merge_group(g));
  LogKAffineDensity out(std::move(merged));

  // Midpoint probes across piece pairs: concavity of log f along segments.
  Rng rng(Rng::derive(0x6d696e72u, pieces.size()));
  std::vector<Polytope> windows;
  for (const DensityPiece& p : out.pieces()) windows.push_back(probe_window(p));
  const int kappa = out.kappa();
  const int per_pair = std::max(2, 48 / std::max(1, kappa * (kappa - 1) / 2));
  for (int i = 0; i < kappa; ++i)
    for (int j = i + 1; j < kappa; ++j)
      for (int rep = 0; rep < per_pair; ++rep) {
        Vec x = sample_uniform(windows[i], rng);
        Vec y = sample_uniform(windows[j], rng);
        double lx = out.log_evaluate(x), ly = out.log_evaluate(y);
        for (double t : {0.25, 0.5, 0.75}) {
          Vec z = t * x + (1 - t) * y;
          double lz = out.log_evaluate(z);
          double bound = t * lx + (1 - t) * ly;
          if (lz < bound - 1e-9 * std::max(1.0, std::fabs(bound)))
            throw NotConcave("minimal_representation: concavity violated across cells");
        }
      }
  return out;
}

LogKAffineDensity affine_pushforward(const LogKAffineDensity& f, const lin::Mat& a,
                                     const Vec& b) {
  const int d = f.dim();
  double det = lin::det(a, d);
  if (std::fabs(det) < 1e-14) throw DegenerateInput("affine_pushforward: singular map");
  lin::Mat inv{};
  if (!lin::inverse(a, d, inv)) throw DegenerateInput("affine_pushforward: singular map");
  auto fwd = [&](const Vec& x) { return lin::matvec(a, x, d) + b; };
  auto inv_t = [&](const Vec& v) {  // (A^-1)^T v
    Vec out(d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out.c[i] += inv[j][i] * v.c[j];
    return out;
  };

  std::vector<DensityPiece> pieces;
  pieces.reserve(f.kappa());
  const double log_jac = std::log(std::fabs(det));
  for (const DensityPiece& p : f.pieces()) {
    AffineForm form;
    form.alpha = inv_t(p.form.alpha);
    form.beta = p.form.beta - dot(form.alpha, b) - log_jac;

    std::vector<Vec> verts;
    for (const Vec& v : p.cell.vertices()) verts.push_back(fwd(v));
    if (p.cell.bounded()) {
      pieces.push_back({form, Polytope(std::move(verts))});
    } else {
      std::vector<Vec> rays;
      for (const Vec& r : p.cell.rays()) rays.push_back(lin::matvec(a, r, d));
      std::vector<HalfSpace> hs;
      for (const HalfSpace& h : p.cell.facets()) {
        Vec n = inv_t(h.normal);
        hs.emplace_back(n, h.offset + dot(n, b));
      }
      pieces.push_back({form, Polytope(std::move(verts), std::move(rays), std::move(hs))});
    }
  }
  return LogKAffineDensity(std::move(pieces));
}

// ---------------------------------------------------------------------------
// make_fkm

namespace {

// [0,inf)^d as a single cell with vertex 0.
Polytope orthant_cell(int d) {
  std::vector<Vec> verts = {Vec(d)};
  std::vector<Vec> rays;
  std::vector<HalfSpace> hs;
  for (int i = 0; i < d; ++i) {
    rays.push_back(unit_axis(d, i));
    hs.emplace_back(-1.0 * unit_axis(d, i), 0.0);
  }
  return Polytope(std::move(verts), std::move(rays), std::move(hs));
}

// Pieces of exp(-rho_S) for a polytope S with 0 in its interior: one cone
// cell per facet of S, with the facet's scaled functional as the negated
// gradient. Intercepts are left at 0; the caller normalizes.
std::vector<DensityPiece> gauge_pieces(const Polytope& S) {
  const int d = S.dim();
  const Hull& h = S.hull();
  const int nf = static_cast<int>(h.facets.size());
  std::vector<Vec> a(nf);
  for (int j = 0; j < nf; ++j) {
    const HalfSpace& pl = h.facet_planes[j];
    if (pl.offset <= 0)
      throw DegenerateInput("gauge_pieces: 0 not in the interior of S");
    a[j] = (1.0 / pl.offset) * pl.normal;
  }
  auto shared_vertices = [&](int i, int j) {
    int cnt = 0;
    for (int u : h.facets[i])
      for (int v : h.facets[j])
        if (u == v) ++cnt;
    return cnt;
  };
  std::vector<DensityPiece> out;
  for (int j = 0; j < nf; ++j) {
    std::vector<Vec> verts = {Vec(d)};
    std::vector<Vec> rays;
    for (int vi : h.facets[j]) rays.push_back(h.points[vi]);
    std::vector<HalfSpace> hs;
    for (int i = 0; i < nf; ++i) {
      if (i == j || shared_vertices(i, j) < d - 1) continue;
      // a_j·x >= a_i·x on the cone over facet j.
      hs.emplace_back(a[i] - a[j], 0.0);
    }
    out.emplace_back(AffineForm(-1.0 * a[j], 0.0),
                     Polytope(std::move(verts), std::move(rays), std::move(hs)));
  }
  return out;
}

// Multiply the density by e^{-x_new} 1{x_new >= 0}: every cell becomes
// cell x [0, inf) and the forms gain slope -1 in the new coordinate.
std::vector<DensityPiece> lift_pieces(const std::vector<DensityPiece>& pieces) {
  std::vector<DensityPiece> out;
  for (const DensityPiece& p : pieces) {
    const int d = p.cell.dim() + 1;
    std::vector<Vec> verts, rays;
    for (const Vec& v : p.cell.vertices()) verts.push_back(embed(v, d));
    for (const Vec& r : p.cell.rays()) rays.push_back(embed(r, d));
    rays.push_back(unit_axis(d, d - 1));
    std::vector<HalfSpace> hs;
    for (const HalfSpace& f : p.cell.facets()) hs.emplace_back(embed(f.normal, d), f.offset);
    hs.emplace_back(-1.0 * unit_axis(d, d - 1), 0.0);
    Vec alpha = embed(p.form.alpha, d);
    alpha.c[d - 1] = -1.0;
    out.emplace_back(AffineForm(alpha, p.form.beta),
                     Polytope(std::move(verts), std::move(rays), std::move(hs)));
  }
  return out;
}

Polytope regular_simplex(int d) {
  std::vector<Vec> verts;
  if (d == 1) {
    verts = {Vec{-1.0}, Vec{1.0}};
  } else if (d == 2) {
    for (int j = 0; j < 3; ++j) {
      double th = kPi / 2 + 2 * kPi * j / 3;
      verts.push_back(Vec{std::cos(th), std::sin(th)});
    }
  } else {
    verts = {Vec{1, 1, 1}, Vec{1, -1, -1}, Vec{-1, 1, -1}, Vec{-1, -1, 1}};
  }
  return Polytope(std::move(verts));
}

// A polytope in R^d with exactly k facets containing 0 in its interior:
// k-gon for d=2, tetrahedron or pyramid over a (k-1)-gon for d=3.
Polytope k_facet_polytope(int k, int d) {
  if (d == 2) {
    std::vector<Vec> verts;
    for (int j = 0; j < k; ++j) {
      double th = 2 * kPi * j / k;
      verts.push_back(Vec{std::cos(th), std::sin(th)});
    }
    return Polytope(std::move(verts));
  }
  if (k == 4) return regular_simplex(3);
  std::vector<Vec> verts = {Vec{0, 0, 1}};
  for (int j = 0; j < k - 1; ++j) {
    double th = 2 * kPi * j / (k - 1);
    verts.push_back(Vec{std::cos(th), std::sin(th), -0.5});
  }
  return Polytope(std::move(verts));
}

// d=1, k >= 3: two-sided tent with k distinct slopes (k+1)/2 - j and knots
// j - k/2, continuous across knots, ends decaying on both sides.
std::vector<DensityPiece> tent_pieces_1d(int k) {
  std::vector<double> slope(k), knot(k - 1), beta(k);
  for (int j = 0; j < k; ++j) slope[j] = (k + 1) / 2.0 - (j + 1);
  for (int j = 0; j < k - 1; ++j) knot[j] = (j + 1) - k / 2.0;
  beta[0] = 0;
  for (int j = 0; j + 1 < k; ++j)
    beta[j + 1] = beta[j] + (slope[j] - slope[j + 1]) * knot[j];
  std::vector<DensityPiece> out;
  for (int j = 0; j < k; ++j) {
    Polytope cell;
    if (j == 0) {
      cell = Polytope({Vec{knot[0]}}, {Vec{-1.0}}, {HalfSpace(Vec{1.0}, knot[0])});
    } else if (j == k - 1) {
      cell = Polytope({Vec{knot[k - 2]}}, {Vec{1.0}}, {HalfSpace(Vec{-1.0}, -knot[k - 2])});
    } else {
      cell = Polytope({Vec{knot[j - 1]}, Vec{knot[j]}});
    }
    out.emplace_back(AffineForm(Vec{slope[j]}, beta[j]), std::move(cell));
  }
  return out;
}

}  // namespace

LogKAffineDensity make_fkm(int k, int m, int d) {
  if (d < 1 || d > 3) throw OutOfRange("make_fkm: d must be 1..3");
  if (k < 1 || m < 0) throw OutOfRange("make_fkm: need k >= 1, m >= 0");
  if (k + m <= d)
    throw EmptyClass("make_fkm: class is empty unless k + m >= d + 1");

  std::vector<DensityPiece> pieces;
  if (k == 1) {
    Vec alpha(d);
    for (int i = 0; i < d; ++i) alpha.c[i] = -1.0;
    pieces.emplace_back(AffineForm(alpha, 0.0), orthant_cell(d));
  } else if (d == 1) {
    pieces = (k == 2) ? gauge_pieces(regular_simplex(1)) : tent_pieces_1d(k);
  } else if (k <= d) {
    // Gauge of a simplex in R^{k-1}, lifted by exponential factors to R^d.
    pieces = gauge_pieces(regular_simplex(k - 1));
    for (int l = k - 1; l < d; ++l) pieces = lift_pieces(pieces);
  } else {
    pieces = gauge_pieces(k_facet_polytope(k, d));
  }
  LogKAffineDensity f(std::move(pieces));
  f.normalize();
  return f;
}

// ---------------------------------------------------------------------------
// Floor-constrained densities on polytopes

double floor_ratio(const LogKAffineDensity& f) {
  if (!f.bounded_support())
    throw OutOfRange("floor_ratio: support must be bounded");
  double vol = 0, min_log = std::numeric_limits<double>::infinity();
  for (const DensityPiece& p : f.pieces()) {
    vol += p.cell.volume();
    for (const Vec& v : p.cell.vertices())
      min_log = std::min(min_log, p.form.eval(v));
  }
  return 1.0 / (vol * std::exp(min_log));
}

namespace {

// Unnormalized core-tilt pieces; returns {pieces, centroid}.
std::vector<DensityPiece> core_tilt_pieces(const Polytope& p, double t, Vec& centroid) {
  const int d = p.dim();
  double vol = p.volume();
  centroid = (1.0 / vol) * exp_moment(p, AffineForm(Vec(d), 0.0));
  const Vec& c = centroid;

  std::vector<Vec> bs;
  for (const HalfSpace& h : p.facets()) {
    double s = h.offset - dot(h.normal, c);
    if (s <= 0) throw DegenerateInput("core_tilt: centroid outside a facet slab");
    bs.push_back((2.0 / s) * h.normal);  // b·(x-c) = 1 halfway out to the facet
  }

  std::vector<Vec> core_verts;
  for (const Vec& v : p.vertices()) core_verts.push_back(c + 0.5 * (v - c));
  std::vector<DensityPiece> pieces;
  pieces.emplace_back(AffineForm(Vec(d), 0.0), Polytope(std::move(core_verts)));

  const int nf = static_cast<int>(bs.size());
  for (int i = 0; i < nf; ++i) {
    // b_i·(x-c) >= 1 and b_i·(x-c) >= b_j·(x-c): the facet's outer cone.
    std::optional<Polytope> cell = clip(p, HalfSpace(-1.0 * bs[i], -1.0 - dot(bs[i], c)));
    for (int j = 0; j < nf && cell; ++j) {
      if (j == i) continue;
      cell = clip(*cell, HalfSpace(bs[j] - bs[i], dot(bs[j] - bs[i], c)));
    }
    if (!cell) continue;
    AffineForm form(-t * bs[i], t + t * dot(bs[i], c));
    pieces.emplace_back(form, std::move(*cell));
  }
  return pieces;
}

}  // namespace

LogKAffineDensity core_tilt(const Polytope& p, double t) {
  if (t < 0) throw OutOfRange("core_tilt: tilt must be >= 0");
  Vec c;
  LogKAffineDensity f(core_tilt_pieces(p, t, c));
  f.normalize();
  return f;
}

LogKAffineDensity core_tilt_with_mass(const Polytope& p, double core_mass) {
  const int d = p.dim();
  const double lo_mass = std::pow(0.5, d);
  if (!(core_mass > lo_mass && core_mass < 1.0))
    throw OutOfRange("core_tilt_with_mass: target must be in (2^-d, 1)");
  auto mass_at = [&](double t) {
    LogKAffineDensity f = core_tilt(p, t);
    return exp_integral(f.pieces()[0].cell, f.pieces()[0].form);
  };
  double lo = 0.0, hi = 1.0;
  while (mass_at(hi) < core_mass) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw OutOfRange("core_tilt_with_mass: target not reachable");
  }
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo + hi);
    (mass_at(mid) < core_mass ? lo : hi) = mid;
  }
  return core_tilt(p, 0.5 * (lo + hi));
}

// ---------------------------------------------------------------------------
// Density: named families

std::string family_name(Family f) {
  switch (f) {
    case Family::gaussian: return "gaussian";
    case Family::laplace: return "laplace";
    case Family::bump: return "bump";
    case Family::uniform_polytope: return "uniform_polytope";
    case Family::uniform_ball: return "uniform_ball";
    case Family::theta_floor: return "theta_floor";
    case Family::piecewise: return "piecewise";
  }
  return "?";
}

struct Density::SamplerTable {
  struct Entry {
    Simplex s;
    AffineForm form;
    double logmax = 0;  // max of the form over the simplex vertices
    double mass = 0;
  };
  std::vector<Entry> entries;
  std::vector<double> cum;
  double total = 0;
};

void Density::build_piecewise_tables() {
  auto table = std::make_shared<SamplerTable>();
  for (const DensityPiece& piece : pw_->pieces()) {
    std::vector<Polytope> windows;
    if (piece.cell.bounded()) {
      windows.push_back(piece.cell);
    } else {
      // Unit slabs along the decay direction keep per-simplex acceptance
      // bounded; the e^-40 tail is far below sampling resolution.
      Vec a = -1.0 * piece.form.alpha;
      Polytope w = truncate(piece.cell, a, 40.0);
      double m = dot(a, w.vertices()[0]);
      for (const Vec& v : w.vertices()) m = std::min(m, dot(a, v));
      for (int j = 0; j < 40; ++j) {
        std::optional<Polytope> slab =
            intersect(w, {HalfSpace(-1.0 * a, -(m + j)), HalfSpace(a, m + j + 1)});
        if (slab) windows.push_back(std::move(*slab));
      }
    }
    for (const Polytope& w : windows) {
      std::vector<Simplex> todo = w.triangulation();
      while (!todo.empty()) {
        Simplex s = todo.back();
        todo.pop_back();
        double mx = -std::numeric_limits<double>::infinity(), mn = -mx;
        for (int i = 0; i <= s.d; ++i) {
          double e = piece.form.eval(s.v[i]);
          mx = std::max(mx, e);
          mn = std::min(mn, e);
        }
        if (mx - mn > 2.0 && s.volume() > 0) {
          for (const Simplex& ch : red_refine(s)) todo.push_back(ch);
          continue;
        }
        SamplerTable::Entry e;
        e.s = s;
        e.form = piece.form;
        e.logmax = mx;
        e.mass = exp_affine_integral(s, piece.form);
        if (e.mass > 0) table->entries.push_back(std::move(e));
      }
    }
  }
  table->cum.reserve(table->entries.size());
  double acc = 0;
  for (const auto& e : table->entries) {
    acc += e.mass;
    table->cum.push_back(acc);
  }
  table->total = acc;
  if (!(acc > 0)) throw DegenerateInput("sampler: density has no mass");
  table_ = std::move(table);
}

Density Density::gaussian(const Vec& mean, const lin::Mat& sigma) {
  Density f;
  f.family_ = Family::gaussian;
  f.dim_ = mean.dim();
  f.mean_ = mean;
  f.sigma_ = sigma;
  if (!lin::cholesky(sigma, f.dim_, f.chol_))
    throw DegenerateInput("gaussian: covariance not positive definite");
  if (!lin::inverse(sigma, f.dim_, f.sigma_inv_))
    throw DegenerateInput("gaussian: covariance not invertible");
  return f;
}

Density Density::standard_gaussian(int d) {
  lin::Mat id{};
  for (int i = 0; i < d; ++i) id[i][i] = 1.0;
  return gaussian(Vec(d), id);
}

Density Density::laplace(int d) {
  if (d < 1 || d > 3) throw OutOfRange("laplace: d must be 1..3");
  Density f;
  f.family_ = Family::laplace;
  f.dim_ = d;
  f.mean_ = Vec(d);
  f.sigma_ = lin::Mat{};
  for (int i = 0; i < d; ++i) f.sigma_[i][i] = d + 1.0;
  return f;
}

Density Density::bump(int d) {
  if (d < 1 || d > 3) throw OutOfRange("bump: d must be 1..3");
  Density f;
  f.family_ = Family::bump;
  f.dim_ = d;
  f.mean_ = Vec(d);
  auto radial = [&](int pw) {
    return integrate_interval(0.0, 1.0, [&](double r) {
      double w = 1.0 - r * r;
      return std::pow(r, pw) * (w > 1e-300 ? std::exp(-1.0 / w) : 0.0);
    }, 1e-12);
  };
  double z = sphere_area(d) * radial(d - 1);
  f.bump_c_ = 1.0 / z;
  f.bump_var_ = f.bump_c_ * sphere_area(d) * radial(d + 1) / d;
  f.sigma_ = lin::Mat{};
  for (int i = 0; i < d; ++i) f.sigma_[i][i] = f.bump_var_;
  return f;
}

Density Density::uniform_polytope(Polytope p) {
  Density f;
  f.family_ = Family::uniform_polytope;
  f.dim_ = p.dim();
  double vol = p.volume();
  f.poly_ = std::make_shared<Polytope>(p);
  f.pw_ = std::make_shared<LogKAffineDensity>(std::vector<DensityPiece>{
      DensityPiece(AffineForm(Vec(f.dim_), -std::log(vol)), std::move(p))});
  f.build_piecewise_tables();
  return f;
}

Density Density::uniform_ball(int d, double radius) {
  if (!(radius > 0)) throw OutOfRange("uniform_ball: radius must be positive");
  Density f;
  f.family_ = Family::uniform_ball;
  f.dim_ = d;
  f.mean_ = Vec(d);
  f.radius_ = radius;
  f.sigma_ = lin::Mat{};
  for (int i = 0; i < d; ++i) f.sigma_[i][i] = radius * radius / (d + 2.0);
  return f;
}

Density Density::theta_floor(double theta, Polytope p) {
  if (!(theta >= 1.0)) throw OutOfRange("theta_floor: need theta >= 1");
  if (theta == 1.0) {
    Density f = uniform_polytope(std::move(p));
    f.family_ = Family::theta_floor;
    f.theta_ = 1.0;
    return f;
  }
  const double log_target = std::log(theta) + std::log(p.volume());
  // g(t) = beta0(t) - t + log(theta vol P) decreases from log(theta) to -inf.
  auto g = [&](double t) {
    LogKAffineDensity f = core_tilt(p, t);
    return f.pieces()[0].form.beta - t + log_target;
  };
  double lo = 0.0, hi = 1.0;
  while (g(hi) > 0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw OutOfRange("theta_floor: theta not reachable");
  }
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo + hi);
    (g(mid) > 0 ? lo : hi) = mid;
  }
  Density f;
  f.family_ = Family::theta_floor;
  f.dim_ = p.dim();
  f.theta_ = theta;
  f.pw_ = std::make_shared<LogKAffineDensity>(core_tilt(p, 0.5 * (lo + hi)));
  f.poly_ = std::make_shared<Polytope>(std::move(p));
  f.build_piecewise_tables();
  return f;
}

Density Density::piecewise(LogKAffineDensity f0) {
  Density f;
  f.family_ = Family::piecewise;
  f.dim_ = f0.dim();
  f.pw_ = std::make_shared<LogKAffineDensity>(std::move(f0));
  f.build_piecewise_tables();
  return f;
}

const LogKAffineDensity& Density::piecewise_form() const {
  if (!pw_) throw OutOfRange("piecewise_form: family has no exact piecewise form");
  return *pw_;
}

const Polytope& Density::polytope_param() const {
  if (!poly_) throw OutOfRange("polytope_param: family has no polytope parameter");
  return *poly_;
}

std::string Density::describe() const {
  switch (family_) {
    case Family::gaussian: return "gaussian(d=" + std::to_string(dim_) + ")";
    case Family::laplace: return "laplace(d=" + std::to_string(dim_) + ")";
    case Family::bump: return "bump(d=" + std::to_string(dim_) + ")";
    case Family::uniform_polytope:
      return "uniform_polytope(m=" + std::to_string(poly_->facet_count()) + ")";
    case Family::uniform_ball: return "uniform_ball(d=" + std::to_string(dim_) + ")";
    case Family::theta_floor: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "theta_floor(theta=%g,m=%d)", theta_,
                    poly_ ? poly_->facet_count() : -1);
      return buf;
    }
    case Family::piecewise:
      return "piecewise(kappa=" + std::to_string(pw_->kappa()) + ")";
  }
  return "?";
}

double Density::log_evaluate(const Vec& x) const {
  const double ninf = -std::numeric_limits<double>::infinity();
  switch (family_) {
    case Family::gaussian: {
      Vec w = x - mean_;
      double q = dot(w, lin::matvec(sigma_inv_, w, dim_));
      double halflogdet = 0;
      for (int i = 0; i < dim_; ++i) halflogdet += std::log(chol_[i][i]);
      return -0.5 * q - 0.5 * dim_ * std::log(2 * kPi) - halflogdet;
    }
    case Family::laplace: {
      double fact = 1;
      for (int i = 2; i <= dim_; ++i) fact *= i;
      return -norm(x) - std::log(fact * unit_ball_volume(dim_));
    }
    case Family::bump: {
      double r2 = norm2(x);
      if (r2 >= 1.0) return ninf;
      return std::log(bump_c_) - 1.0 / (1.0 - r2);
    }
    case Family::uniform_ball:
      return norm(x) <= radius_ ? -std::log(unit_ball_volume(dim_)) - dim_ * std::log(radius_)
                                : ninf;
    default:
      return pw_->log_evaluate(x);
  }
}

double Density::evaluate(const Vec& x) const {
  double l = log_evaluate(x);
  return std::isfinite(l) ? std::exp(l) : 0.0;
}

Vec Density::grad_log(const Vec& x) const {
  switch (family_) {
    case Family::gaussian: {
      Vec w = x - mean_;
      return -1.0 * lin::matvec(sigma_inv_, w, dim_);
    }
    case Family::laplace: {
      double r = norm(x);
      if (r < 1e-14) return Vec(dim_);
      return (-1.0 / r) * x;
    }
    case Family::bump: {
      double r2 = norm2(x);
      if (r2 >= 1.0) return Vec(dim_);
      double w = 1.0 - r2;
      return (-2.0 / (w * w)) * x;
    }
    case Family::uniform_ball:
      return Vec(dim_);
    default: {
      int j = pw_->find_cell(x);
      if (j < 0) return Vec(dim_);
      return pw_->pieces()[j].form.alpha;
    }
  }
}

Moments Density::moments() const {
  Moments m;
  switch (family_) {
    case Family::gaussian:
    case Family::laplace:
    case Family::bump:
    case Family::uniform_ball:
      m.mean = mean_;
      m.cov = sigma_;
      return m;
    default: {
      Vec mu(dim_);
      lin::Mat m2{};
      for (const DensityPiece& p : pw_->pieces()) {
        mu += exp_moment(p.cell, p.form);
        lin::Mat s = exp_second_moment(p.cell, p.form);
        for (int i = 0; i < dim_; ++i)
          for (int j = 0; j < dim_; ++j) m2[i][j] += s[i][j];
      }
      double mass = pw_->total_mass();
      mu = (1.0 / mass) * mu;
      m.mean = mu;
      for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j)
          m.cov[i][j] = m2[i][j] / mass - mu.c[i] * mu.c[j];
      return m;
    }
  }
}

namespace {

Vec sphere_direction(Rng& rng, int d) {
  for (;;) {
    Vec u(d);
    for (int i = 0; i < d; ++i) u.c[i] = rng.normal();
    double n = norm(u);
    if (n > 1e-12) return (1.0 / n) * u;
  }
}

}  // namespace

Sample Density::sample(int n, std::uint64_t seed) const {
  if (n < 1) throw OutOfRange("sample: need n >= 1");
  Sample out;
  out.seed = seed;
  out.source = describe();
  out.points.reserve(n);
  Rng rng(seed);
  switch (family_) {
    case Family::gaussian:
      for (int i = 0; i < n; ++i) {
        Vec z(dim_);
        for (int j = 0; j < dim_; ++j) z.c[j] = rng.normal();
        out.points.push_back(mean_ + lin::matvec(chol_, z, dim_));
      }
      break;
    case Family::laplace:
      for (int i = 0; i < n; ++i)
        out.points.push_back(rng.gamma_int(dim_) * sphere_direction(rng, dim_));
      break;
    case Family::bump:
      for (int i = 0; i < n; ++i) {
        for (;;) {
          double r = std::pow(rng.u01(), 1.0 / dim_);
          Vec x = r * sphere_direction(rng, dim_);
          double w = 1.0 - norm2(x);
          if (w > 0 && std::log(rng.u01()) <= 1.0 - 1.0 / w) {
            out.points.push_back(x);
            break;
          }
        }
      }
      break;
    case Family::uniform_ball:
      for (int i = 0; i < n; ++i)
        out.points.push_back(radius_ * std::pow(rng.u01(), 1.0 / dim_) *
                             sphere_direction(rng, dim_));
      break;
    default: {
      const SamplerTable& t = *table_;
      for (int i = 0; i < n; ++i) {
        double u = rng.u01() * t.total;
        size_t lo = std::lower_bound(t.cum.begin(), t.cum.end(), u) - t.cum.begin();
        if (lo >= t.entries.size()) lo = t.entries.size() - 1;
        const auto& e = t.entries[lo];
        for (int guard = 0;; ++guard) {
          Vec x = e.s.sample_uniform(rng);
          if (std::log(rng.u01()) <= e.form.eval(x) - e.logmax) {
            out.points.push_back(x);
            break;
          }
          if (guard > 100000)
            throw DegenerateInput("sample: rejection loop stuck");
        }
      }
    }
  }
  return out;
}

}  // namespace lcde
