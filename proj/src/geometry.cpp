#include "lcde/geometry.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>

namespace lcde {

// ---------------------------------------------------------------------------
// Simplex

double Simplex::volume() const {
  lin::Mat m{};
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m[i][j] = v[i + 1].c[j] - v[0].c[j];
  double dt = lin::det(m, d);
  double fact = 1;
  for (int i = 2; i <= d; ++i) fact *= i;
  return std::fabs(dt) / fact;
}

Vec Simplex::centroid() const {
  Vec c(d);
  for (int i = 0; i <= d; ++i) c += v[i];
  return c * (1.0 / (d + 1));
}

bool Simplex::barycentric(const Vec& x, std::array<double, kMaxDim + 1>& bary) const {
  lin::Mat m{};
  Vec rhs(d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) m[i][j] = v[j + 1].c[i] - v[0].c[i];
  for (int i = 0; i < d; ++i) rhs.c[i] = x.c[i] - v[0].c[i];
  Vec sol;
  if (!lin::solve(m, rhs, d, sol)) return false;
  double s = 0;
  for (int j = 0; j < d; ++j) {
    bary[j + 1] = sol.c[j];
    s += sol.c[j];
  }
  bary[0] = 1.0 - s;
  return true;
}

bool Simplex::contains(const Vec& x, double tol) const {
  std::array<double, kMaxDim + 1> b{};
  if (!barycentric(x, b)) return false;
  for (int i = 0; i <= d; ++i)
    if (b[i] < -tol) return false;
  return true;
}

Vec Simplex::sample_uniform(Rng& rng) const {
  // Dirichlet(1,...,1) weights via exponential spacings.
  std::array<double, kMaxDim + 2> w{};
  double s = 0;
  for (int i = 0; i <= d; ++i) {
    w[i] = rng.expo();
    s += w[i];
  }
  Vec x(d);
  for (int i = 0; i <= d; ++i) {
    double lam = w[i] / s;
    for (int j = 0; j < d; ++j) x.c[j] += lam * v[i].c[j];
  }
  return x;
}

// ---------------------------------------------------------------------------
// Hull construction (incremental with outside sets, dims 2..4; dim 1 direct)

namespace {

using LD = long double;

// Vector orthogonal to the dim-1 spanning edge vectors, long double.
void gen_normal(const std::array<std::array<LD, 4>, 3>& e, int dim,
                std::array<LD, 4>& n) {
  if (dim == 2) {
    n[0] = e[0][1];
    n[1] = -e[0][0];
  } else if (dim == 3) {
    n[0] = e[0][1] * e[1][2] - e[0][2] * e[1][1];
    n[1] = e[0][2] * e[1][0] - e[0][0] * e[1][2];
    n[2] = e[0][0] * e[1][1] - e[0][1] * e[1][0];
  } else {
    // 4D: cofactor expansion; n[i] = (-1)^i det of the 3x3 minor without col i.
    for (int i = 0; i < 4; ++i) {
      LD m[3][3];
      for (int r = 0; r < 3; ++r) {
        int cc = 0;
        for (int col = 0; col < 4; ++col) {
          if (col == i) continue;
          m[r][cc++] = e[r][col];
        }
      }
      LD dt = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
              m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
              m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
      n[i] = (i % 2 == 0) ? dt : -dt;
    }
  }
}

struct BFacet {
  std::array<int, 4> v{};   // vertex ids (input indices), dim entries
  std::array<int, 4> nb{};  // neighbor facet id across ridge opposite v[k]
  Vec normal;               // unit outward
  double offset = 0;
  std::vector<int> outside;
  int far_pt = -1;
  double far_d = 0;
  bool alive = true;
};

struct Builder {
  int dim;
  const std::vector<Vec>& pts;
  double eps;  // scaled coplanarity tolerance
  std::vector<BFacet> fs;
  Vec interior;

  Builder(const std::vector<Vec>& p, int d, double e) : dim(d), pts(p), eps(e) {}

  // Plane through the facet's vertices, outward w.r.t. `interior`.
  // Construction in long double keeps near-degenerate slivers consistent.
  bool set_plane(BFacet& f) {
    std::array<std::array<LD, 4>, 3> e{};
    for (int k = 1; k < dim; ++k)
      for (int j = 0; j < dim; ++j)
        e[k - 1][j] = (LD)pts[f.v[k]].c[j] - (LD)pts[f.v[0]].c[j];
    std::array<LD, 4> n{};
    gen_normal(e, dim, n);
    LD nn = 0;
    for (int j = 0; j < dim; ++j) nn += n[j] * n[j];
    nn = std::sqrt((double)nn);
    if (!(nn > 0)) return false;
    LD off = 0;
    for (int k = 0; k < dim; ++k) {
      LD s = 0;
      for (int j = 0; j < dim; ++j) s += n[j] * (LD)pts[f.v[k]].c[j];
      off += s;
    }
    off /= dim;
    f.normal = Vec(dim);
    for (int j = 0; j < dim; ++j) f.normal.c[j] = (double)(n[j] / nn);
    f.offset = (double)(off / nn);
    if (dot(f.normal, interior) - f.offset > 0) {
      f.normal *= -1.0;
      f.offset = -f.offset;
    }
    return true;
  }

  double height(const BFacet& f, int p) const {
    return dot(f.normal, pts[p]) - f.offset;
  }

  void assign_outside(BFacet& f, const std::vector<int>& cands) {
    for (int p : cands) {
      bool used = false;
      for (int k = 0; k < dim && !used; ++k) used = (f.v[k] == p);
      if (used) continue;
      double h = height(f, p);
      if (h > eps) {
        f.outside.push_back(p);
        if (h > f.far_d) {
          f.far_d = h;
          f.far_pt = p;
        }
      }
    }
  }
};

Hull hull_1d(const std::vector<Vec>& pts) {
  int lo = 0, hi = 0;
  for (int i = 1; i < (int)pts.size(); ++i) {
    if (pts[i].c[0] < pts[lo].c[0]) lo = i;
    if (pts[i].c[0] > pts[hi].c[0]) hi = i;
  }
  if (!(pts[hi].c[0] - pts[lo].c[0] > 0))
    throw DegenerateInput("convex_hull: all points coincide");
  Hull h;
  h.dim = 1;
  h.points = pts;
  h.vertices = {std::min(lo, hi), std::max(lo, hi)};
  h.simplices.push_back({lo, -1, -1, -1});
  h.simplex_planes.push_back(HalfSpace(Vec{-1.0}, -pts[lo].c[0]));
  h.simplices.push_back({hi, -1, -1, -1});
  h.simplex_planes.push_back(HalfSpace(Vec{1.0}, pts[hi].c[0]));
  h.facets = {{lo}, {hi}};
  h.facet_planes = h.simplex_planes;
  h.interior = Vec{0.5 * (pts[lo].c[0] + pts[hi].c[0])};
  return h;
}

}  // namespace

Hull convex_hull(const std::vector<Vec>& pts) {
  if (pts.empty()) throw DegenerateInput("convex_hull: no points");
  const int dim = pts[0].dim();
  for (const Vec& p : pts)
    if (p.dim() != dim) throw DegenerateInput("convex_hull: mixed dimensions");
  if ((int)pts.size() < dim + 1)
    throw DegenerateInput("convex_hull: fewer than d+1 points");
  if (dim == 1) return hull_1d(pts);
  if (dim > kMaxDim) throw OutOfRange("convex_hull: dim > 4");

  double maxabs = 0;
  for (const Vec& p : pts)
    for (int j = 0; j < dim; ++j) maxabs = std::max(maxabs, std::fabs(p.c[j]));
  const double eps = kCoplanarTol * std::max(1.0, maxabs);

  Builder B(pts, dim, eps);

  // Initial simplex: greedy farthest-from-span selection.
  std::vector<int> init;
  {
    int axis = 0, lo = 0, hi = 0;
    double best = -1;
    for (int j = 0; j < dim; ++j) {
      int a = 0, b = 0;
      for (int i = 1; i < (int)pts.size(); ++i) {
        if (pts[i].c[j] < pts[a].c[j]) a = i;
        if (pts[i].c[j] > pts[b].c[j]) b = i;
      }
      double r = pts[b].c[j] - pts[a].c[j];
      if (r > best) {
        best = r;
        axis = j;
        lo = a;
        hi = b;
      }
    }
    (void)axis;
    if (best <= eps) throw DegenerateInput("convex_hull: points affinely dependent");
    init = {lo, hi};
    std::vector<Vec> basis;  // orthonormal, spanning (p - p0)
    Vec e0 = pts[hi] - pts[lo];
    basis.push_back(e0 * (1.0 / norm(e0)));
    while ((int)init.size() < dim + 1) {
      int bestp = -1;
      double bestr = eps;
      Vec bestres;
      for (int i = 0; i < (int)pts.size(); ++i) {
        Vec r = pts[i] - pts[init[0]];
        for (const Vec& b : basis) r -= b * dot(b, r);
        double nr = norm(r);
        if (nr > bestr) {
          bestr = nr;
          bestp = i;
          bestres = r;
        }
      }
      if (bestp < 0) throw DegenerateInput("convex_hull: points affinely dependent");
      init.push_back(bestp);
      basis.push_back(bestres * (1.0 / norm(bestres)));
    }
  }

  B.interior = Vec(dim);
  for (int id : init) B.interior += pts[id];
  B.interior *= 1.0 / (dim + 1);

  // dim+1 facets of the initial simplex; facet k omits init[k].
  B.fs.resize(dim + 1);
  for (int k = 0; k <= dim; ++k) {
    BFacet& f = B.fs[k];
    int c = 0;
    for (int i = 0; i <= dim; ++i)
      if (i != k) f.v[c++] = init[i];
    if (!B.set_plane(f)) throw DegenerateInput("convex_hull: degenerate start");
  }
  // nb[slot] is the facet opposite f.v[slot]: slot c of facet k holds
  // init[i], and the facet sharing everything except init[i] is facet i.
  for (int k = 0; k <= dim; ++k) {
    BFacet& f = B.fs[k];
    int c = 0;
    for (int i = 0; i <= dim; ++i)
      if (i != k) f.nb[c++] = i;
  }

  {
    std::vector<int> all(pts.size());
    std::iota(all.begin(), all.end(), 0);
    for (int k = 0; k <= dim; ++k) B.assign_outside(B.fs[k], all);
  }

  // Main loop.
  std::deque<int> pending;
  for (int k = 0; k <= dim; ++k)
    if (!B.fs[k].outside.empty()) pending.push_back(k);

  std::vector<int> visible, horizon_f, horizon_k;
  std::vector<char> mark(B.fs.size(), 0);

  while (!pending.empty()) {
    int f0 = pending.front();
    pending.pop_front();
    if (f0 >= (int)B.fs.size() || !B.fs[f0].alive || B.fs[f0].outside.empty())
      continue;
    int p = B.fs[f0].far_pt;

    // BFS for facets visible from p.
    visible.clear();
    horizon_f.clear();
    horizon_k.clear();
    mark.assign(B.fs.size(), 0);
    std::deque<int> q{f0};
    mark[f0] = 1;
    while (!q.empty()) {
      int fi = q.front();
      q.pop_front();
      visible.push_back(fi);
      for (int k = 0; k < dim; ++k) {
        int g = B.fs[fi].nb[k];
        if (mark[g]) continue;
        if (B.fs[g].alive && B.height(B.fs[g], p) > B.eps) {
          mark[g] = 1;
          q.push_back(g);
        } else {
          horizon_f.push_back(fi);
          horizon_k.push_back(k);
        }
      }
    }

    // New facets over horizon ridges.
    std::map<std::array<int, 4>, std::pair<int, int>> ridge_map;  // ridge -> (facet, slot)
    std::vector<int> created;
    for (size_t hidx = 0; hidx < horizon_f.size(); ++hidx) {
      int fi = horizon_f[hidx];
      int k = horizon_k[hidx];
      int survivor = B.fs[fi].nb[k];
      BFacet nf;
      int c = 0;
      for (int i = 0; i < dim; ++i)
        if (i != k) nf.v[c++] = B.fs[fi].v[i];
      nf.v[dim - 1] = p;
      if (!B.set_plane(nf)) {
        // Sliver ridge; plane from the survivor keeps orientation sane.
        nf.normal = B.fs[survivor].normal;
        nf.offset = B.fs[survivor].offset;
      }
      int nid = (int)B.fs.size();
      B.fs.push_back(std::move(nf));
      created.push_back(nid);
      BFacet& nfr = B.fs[nid];

      // Neighbor across the ridge itself (slot of p, which is dim-1) is the
      // survivor; fix the survivor's back-pointer.
      nfr.nb[dim - 1] = survivor;
      BFacet& sv = B.fs[survivor];
      for (int i = 0; i < dim; ++i)
        if (sv.nb[i] == fi) sv.nb[i] = nid;

      // Remaining ridges (drop one ridge vertex, keep p) pair up among the
      // new facets.
      for (int i = 0; i < dim - 1; ++i) {
        std::array<int, 4> r{-1, -1, -1, -1};
        int cc = 0;
        for (int j = 0; j < dim - 1; ++j)
          if (j != i) r[cc++] = nfr.v[j];
        r[cc++] = p;
        std::sort(r.begin(), r.begin() + (dim - 1));
        auto it = ridge_map.find(r);
        if (it == ridge_map.end()) {
          ridge_map[r] = {nid, i};
        } else {
          nfr.nb[i] = it->second.first;
          B.fs[it->second.first].nb[it->second.second] = nid;
        }
      }
    }

    // Redistribute outside points of dead facets.
    std::vector<int> orphans;
    for (int fi : visible) {
      B.fs[fi].alive = false;
      for (int q2 : B.fs[fi].outside)
        if (q2 != p) orphans.push_back(q2);
      B.fs[fi].outside.clear();
    }
    std::sort(orphans.begin(), orphans.end());
    orphans.erase(std::unique(orphans.begin(), orphans.end()), orphans.end());
    for (int nid : created) {
      B.assign_outside(B.fs[nid], orphans);
      if (!B.fs[nid].outside.empty()) pending.push_back(nid);
    }
  }

  // Collect output.
  Hull h;
  h.dim = dim;
  h.points = pts;
  h.interior = B.interior;
  std::vector<int> alive_ids;
  for (int i = 0; i < (int)B.fs.size(); ++i)
    if (B.fs[i].alive) alive_ids.push_back(i);
  std::vector<int> back(B.fs.size(), -1);
  for (int i = 0; i < (int)alive_ids.size(); ++i) back[alive_ids[i]] = i;

  for (int id : alive_ids) {
    const BFacet& f = B.fs[id];
    std::array<int, 4> s{-1, -1, -1, -1};
    for (int k = 0; k < dim; ++k) s[k] = f.v[k];
    h.simplices.push_back(s);
    h.simplex_planes.push_back(HalfSpace(f.normal, f.offset));
  }

  // Merge coplanar adjacent facets (union-find).
  const int m = (int)alive_ids.size();
  std::vector<int> uf(m);
  std::iota(uf.begin(), uf.end(), 0);
  std::function<int(int)> find = [&](int a) {
    while (uf[a] != a) a = uf[a] = uf[uf[a]];
    return a;
  };
  const double meps = eps;
  for (int i = 0; i < m; ++i) {
    const BFacet& f = B.fs[alive_ids[i]];
    for (int k = 0; k < dim; ++k) {
      int g = back[f.nb[k]];
      if (g < 0 || g <= i) continue;
      // Coplanar if the neighbor's off-ridge vertex lies on f's plane.
      const BFacet& fg = B.fs[alive_ids[g]];
      bool cop = true;
      for (int kk = 0; kk < dim && cop; ++kk) {
        double hh = dot(f.normal, pts[fg.v[kk]]) - f.offset;
        if (std::fabs(hh) > meps) cop = false;
      }
      if (cop) uf[find(i)] = find(g);
    }
  }
  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < m; ++i) groups[find(i)].push_back(i);

  for (auto& [root, members] : groups) {
    // Averaged plane over the group.
    Vec n(dim);
    for (int i : members) n += B.fs[alive_ids[i]].normal;
    n *= 1.0 / norm(n);
    std::vector<int> vs;
    for (int i : members)
      for (int k = 0; k < dim; ++k) vs.push_back(B.fs[alive_ids[i]].v[k]);
    std::sort(vs.begin(), vs.end());
    vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
    double off = 0;
    for (int v : vs) off += dot(n, pts[v]);
    off /= (double)vs.size();

    if (dim == 2 && vs.size() > 2) {
      // Collinear chain: keep extreme endpoints along the edge direction.
      Vec t{-n.c[1], n.c[0]};
      int a = vs[0], b = vs[0];
      for (int v : vs) {
        if (dot(t, pts[v]) < dot(t, pts[a])) a = v;
        if (dot(t, pts[v]) > dot(t, pts[b])) b = v;
      }
      vs = {std::min(a, b), std::max(a, b)};
    } else if (dim == 3 && vs.size() > 3) {
      // Cyclic order in the facet plane, then drop interior-of-edge points.
      Vec u;
      {
        Vec e = pts[vs[1]] - pts[vs[0]];
        e -= n * dot(n, e);
        u = e * (1.0 / norm(e));
      }
      Vec w{n.c[1] * u.c[2] - n.c[2] * u.c[1], n.c[2] * u.c[0] - n.c[0] * u.c[2],
            n.c[0] * u.c[1] - n.c[1] * u.c[0]};
      Vec cen(3);
      for (int v : vs) cen += pts[v];
      cen *= 1.0 / (double)vs.size();
      std::sort(vs.begin(), vs.end(), [&](int a, int b) {
        Vec pa = pts[a] - cen, pb = pts[b] - cen;
        return std::atan2(dot(w, pa), dot(u, pa)) < std::atan2(dot(w, pb), dot(u, pb));
      });
      // Drop points lying on the segment between their cyclic neighbors.
      std::vector<int> trimmed;
      const int nv = (int)vs.size();
      for (int i = 0; i < nv; ++i) {
        const Vec& a = pts[vs[(i + nv - 1) % nv]];
        const Vec& b = pts[vs[i]];
        const Vec& c = pts[vs[(i + 1) % nv]];
        Vec ac = c - a;
        double len = norm(ac);
        double off_line;
        if (len < meps) {
          off_line = dist(b, a);
        } else {
          Vec ab = b - a;
          Vec cr{ab.c[1] * ac.c[2] - ab.c[2] * ac.c[1],
                 ab.c[2] * ac.c[0] - ab.c[0] * ac.c[2],
                 ab.c[0] * ac.c[1] - ab.c[1] * ac.c[0]};
          off_line = norm(cr) / len;
        }
        if (off_line > meps) trimmed.push_back(vs[i]);
      }
      if ((int)trimmed.size() >= 3) vs = trimmed;
    }
    h.facets.push_back(vs);
    h.facet_planes.push_back(HalfSpace(n, off));
  }

  std::vector<int> hv;
  for (const auto& fc : h.facets)
    for (int v : fc) hv.push_back(v);
  std::sort(hv.begin(), hv.end());
  hv.erase(std::unique(hv.begin(), hv.end()), hv.end());
  h.vertices = hv;
  return h;
}

// ---------------------------------------------------------------------------
// Fan triangulation

std::vector<Simplex> triangulate(const Hull& h) {
  std::vector<Simplex> out;
  const int d = h.dim;
  if (d == 1) {
    Simplex s;
    s.d = 1;
    s.v[0] = h.points[h.vertices[0]];
    s.v[1] = h.points[h.vertices[1]];
    out.push_back(s);
    return out;
  }
  const int apex = h.vertices.front();  // lowest input index on the hull
  auto contains_apex = [&](const std::vector<int>& fc) {
    return std::find(fc.begin(), fc.end(), apex) != fc.end();
  };
  auto emit = [&](std::initializer_list<int> ids) {
    Simplex s;
    s.d = d;
    int i = 0;
    for (int id : ids) s.v[i++] = h.points[id];
    if (s.volume() > 0) out.push_back(s);
  };
  if (d == 4) {
    for (size_t i = 0; i < h.simplices.size(); ++i) {
      const auto& sf = h.simplices[i];
      if (sf[0] == apex || sf[1] == apex || sf[2] == apex || sf[3] == apex) continue;
      emit({apex, sf[0], sf[1], sf[2], sf[3]});
    }
    return out;
  }
  for (const auto& fc : h.facets) {
    if (contains_apex(fc)) continue;
    if (d == 2) {
      emit({apex, fc[0], fc[1]});
    } else {
      // Fan the facet polygon from its lowest-index vertex, then cone to apex.
      const int nv = (int)fc.size();
      int a = 0;
      for (int i = 1; i < nv; ++i)
        if (fc[i] < fc[a]) a = i;
      for (int j = 1; j + 1 < nv; ++j) {
        int i1 = (a + j) % nv, i2 = (a + j + 1) % nv;
        emit({apex, fc[a], fc[i1], fc[i2]});
      }
    }
  }
  return out;
}

double Hull::volume() const {
  double s = 0;
  for (const Simplex& t : triangulate(*this)) s += t.volume();
  return s;
}

// ---------------------------------------------------------------------------
// Polytope

Polytope::Polytope(std::vector<Vec> verts) {
  if (verts.empty()) throw DegenerateInput("Polytope: no vertices");
  d_ = verts[0].dim();
  Hull h = convex_hull(verts);
  verts_.clear();
  for (int id : h.vertices) verts_.push_back(h.points[id]);
  hull_ = std::move(h);
  // Re-index the stored hull to the reduced vertex list for stable reuse.
}

Polytope::Polytope(std::vector<Vec> verts, std::vector<Vec> rays,
                   std::vector<HalfSpace> halfspaces)
    : verts_(std::move(verts)), rays_(std::move(rays)) {
  if (verts_.empty()) throw DegenerateInput("Polytope: no vertices");
  d_ = verts_[0].dim();
  facets_ = std::move(halfspaces);
  have_facets_ = true;
  if (rays_.empty()) {
    // Bounded with supplied halfspaces: still build the hull for volume etc.
    hull_ = convex_hull(verts_);
    std::vector<Vec> vv;
    for (int id : hull_->vertices) vv.push_back(hull_->points[id]);
    verts_ = vv;
  }
}

const Hull& Polytope::hull() const {
  if (!bounded()) throw OutOfRange("Polytope::hull: unbounded cell");
  if (!hull_) hull_ = convex_hull(verts_);
  return *hull_;
}

const std::vector<HalfSpace>& Polytope::facets() const {
  if (!have_facets_) {
    facets_ = hull().facet_planes;
    have_facets_ = true;
  }
  return facets_;
}

bool Polytope::contains(const Vec& x, double tol) const {
  double scale = 1.0;
  for (const Vec& v : verts_)
    for (int j = 0; j < d_; ++j) scale = std::max(scale, std::fabs(v.c[j]));
  for (const HalfSpace& f : facets())
    if (f.eval(x) > tol * scale) return false;
  return true;
}

double Polytope::volume() const {
  if (!bounded()) throw NotIntegrable("Polytope::volume: unbounded cell");
  double s = 0;
  for (const Simplex& t : triangulation()) s += t.volume();
  return s;
}

Vec Polytope::vertex_centroid() const {
  Vec c(d_);
  for (const Vec& v : verts_) c += v;
  return c * (1.0 / (double)verts_.size());
}

const std::vector<Simplex>& Polytope::triangulation() const {
  if (!have_tris_) {
    if (!bounded()) throw NotIntegrable("Polytope::triangulation: unbounded cell");
    tris_ = triangulate(hull());
    have_tris_ = true;
  }
  return tris_;
}

// ---------------------------------------------------------------------------
// Clipping

namespace {

std::vector<std::pair<int, int>> hull_edges(const Hull& h) {
  std::vector<std::pair<int, int>> es;
  if (h.dim == 1) {
    es.push_back({h.vertices[0], h.vertices[1]});
    return es;
  }
  if (h.dim == 2) {
    for (const auto& fc : h.facets) es.push_back({fc[0], fc[1]});
  } else if (h.dim == 3) {
    for (const auto& fc : h.facets) {
      const int nv = (int)fc.size();
      for (int i = 0; i < nv; ++i) {
        int a = fc[i], b = fc[(i + 1) % nv];
        es.push_back({std::min(a, b), std::max(a, b)});
      }
    }
  } else {
    for (const auto& sf : h.simplices)
      for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
          es.push_back({std::min(sf[i], sf[j]), std::max(sf[i], sf[j])});
  }
  std::sort(es.begin(), es.end());
  es.erase(std::unique(es.begin(), es.end()), es.end());
  return es;
}

}  // namespace

std::optional<Polytope> clip(const Polytope& p, const HalfSpace& hs, double tol) {
  const Hull& h = p.hull();
  const auto& pts = h.points;
  double scale = 1.0;
  for (int id : h.vertices)
    for (int j = 0; j < h.dim; ++j) scale = std::max(scale, std::fabs(pts[id].c[j]));
  const double eps = tol * scale;

  std::vector<double> ev(pts.size(), 0.0);
  bool any_in = false, any_out = false;
  for (int id : h.vertices) {
    ev[id] = hs.eval(pts[id]);
    if (ev[id] < -eps) any_in = true;
    if (ev[id] > eps) any_out = true;
  }
  if (!any_out) return p;        // fully inside (boundary contact allowed)
  if (!any_in) return std::nullopt;  // at most a face survives

  std::vector<Vec> keep;
  for (int id : h.vertices)
    if (ev[id] <= eps) keep.push_back(pts[id]);
  for (const auto& [a, b] : hull_edges(h)) {
    double ea = ev[a], eb = ev[b];
    if ((ea < -eps && eb > eps) || (eb < -eps && ea > eps)) {
      double t = ea / (ea - eb);
      keep.push_back(pts[a] + t * (pts[b] - pts[a]));
    }
  }
  try {
    return Polytope(std::move(keep));
  } catch (const DegenerateInput&) {
    return std::nullopt;
  }
}

std::optional<Polytope> intersect(const Polytope& p,
                                  const std::vector<HalfSpace>& hs, double tol) {
  std::optional<Polytope> cur = p;
  for (const HalfSpace& h : hs) {
    cur = clip(*cur, h, tol);
    if (!cur) return std::nullopt;
  }
  return cur;
}

std::optional<Polytope> intersect_cells(const Polytope& a, const Polytope& b) {
  if (!a.bounded() && !b.bounded())
    throw OutOfRange("intersect_cells: both cells unbounded; truncate first");
  const Polytope& base = a.bounded() ? a : b;
  const Polytope& other = a.bounded() ? b : a;
  return intersect(base, other.facets());
}

Vec sample_uniform(const Polytope& p, Rng& rng) {
  const auto& tris = p.triangulation();
  double total = 0;
  for (const Simplex& t : tris) total += t.volume();
  double u = rng.u01() * total, acc = 0;
  for (const Simplex& t : tris) {
    acc += t.volume();
    if (u <= acc || &t == &tris.back()) return t.sample_uniform(rng);
  }
  return tris.back().sample_uniform(rng);
}

// ---------------------------------------------------------------------------
// Subdivision checks

long long gamma(const Subdivision& s) {
  long long g = 0;
  for (const Polytope& c : s.cells) g += c.facet_count();
  return g;
}

SubdivisionReport validate_subdivision(const Subdivision& s, const Polytope& ambient,
                                       uint64_t seed, int probes_per_cell,
                                       int coverage_samples, bool check_conformity) {
  SubdivisionReport rep;
  Rng rng(Rng::derive(seed, 0xc0ffee));
  const int d = ambient.dim();
  double scale = 1.0;
  for (const Vec& v : ambient.vertices())
    for (int j = 0; j < d; ++j) scale = std::max(scale, std::fabs(v.c[j]));
  const double eps = 1e-9 * scale;

  auto note = [&](const std::string& v) {
    rep.ok = false;
    rep.violations.push_back(v);
  };

  // Interior-overlap probes.
  for (size_t i = 0; i < s.cells.size(); ++i) {
    if (!s.cells[i].bounded()) continue;
    for (int t = 0; t < probes_per_cell; ++t) {
      Vec x = sample_uniform(s.cells[i], rng);
      for (size_t j = 0; j < s.cells.size(); ++j) {
        if (j == i) continue;
        bool strict = true;
        for (const HalfSpace& f : s.cells[j].facets())
          if (f.eval(x) > -eps) {
            strict = false;
            break;
          }
        if (strict) {
          std::ostringstream o;
          o << "overlapping interiors: cells " << i << " and " << j;
          note(o.str());
          t = probes_per_cell;  // one report per pair is enough
          break;
        }
      }
    }
  }

  // Coverage.
  {
    int in = 0;
    for (int t = 0; t < coverage_samples; ++t) {
      Vec x = sample_uniform(ambient, rng);
      for (const Polytope& c : s.cells)
        if (c.contains(x, 1e-9)) {
          ++in;
          break;
        }
    }
    rep.coverage = (double)in / coverage_samples;
    if (std::fabs(rep.coverage - 1.0) > 0.005) {
      std::ostringstream o;
      o << "coverage gap: MC covered fraction " << rep.coverage;
      note(o.str());
    }
  }

  // Conformity: vertex of one cell inside the relative interior of another
  // cell's boundary face without being one of its vertices.
  if (check_conformity) {
    for (size_t i = 0; i < s.cells.size(); ++i) {
      for (const Vec& v : s.cells[i].vertices()) {
        for (size_t j = 0; j < s.cells.size(); ++j) {
          if (j == i) continue;
          const Polytope& B = s.cells[j];
          if (!B.contains(v, 1e-9)) continue;
          bool interior = true;
          for (const HalfSpace& f : B.facets())
            if (f.eval(v) > -eps) interior = false;
          if (interior) continue;  // reported by overlap probes
          bool is_vertex = false;
          for (const Vec& w : B.vertices())
            if (dist(v, w) <= eps * 10) {
              is_vertex = true;
              break;
            }
          if (!is_vertex) {
            std::ostringstream o;
            o << "non-face contact: vertex of cell " << i
              << " inside boundary of cell " << j;
            note(o.str());
          }
        }
      }
    }
  }
  return rep;
}

EulerReport euler_check(const Polytope& p) {
  EulerReport r;
  if (p.dim() != 3) {
    r.detail = "euler_check requires dimension 3";
    return r;
  }
  const Hull& h = p.hull();
  r.v = (int)h.vertices.size();
  r.f = (int)h.facets.size();
  size_t halfedges = 0;
  for (const auto& fc : h.facets) halfedges += fc.size();
  if (halfedges % 2 != 0) {
    r.detail = "odd half-edge count (facet cycles inconsistent)";
    return r;
  }
  r.e = (int)(halfedges / 2);
  r.triangulation_cells = (long long)p.triangulation().size();
  std::ostringstream o;
  bool ok = true;
  if (r.v - r.e + r.f != 2) {
    ok = false;
    o << "v-e+f=" << (r.v - r.e + r.f) << " != 2; ";
  }
  if (r.v > 2 * r.f - 4) {
    ok = false;
    o << "v > 2f-4; ";
  }
  if (r.f > 2 * r.v - 4) {
    ok = false;
    o << "f > 2v-4; ";
  }
  if (r.v >= 5 && r.triangulation_cells > 3LL * r.v - 11) {
    ok = false;
    o << "triangulation exceeds 3v-11; ";
  }
  r.ok = ok;
  r.detail = o.str();
  return r;
}

}  // namespace lcde
