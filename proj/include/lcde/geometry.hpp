#pragma once

#include <optional>
#include <vector>

#include "lcde/core.hpp"

// Convex geometry in R^1..R^3 (hulls up to R^4 for lifted height points):
// convex hulls with merged coplanar facets, bounded polytopes with lazily
// derived halfspace representations, possibly-unbounded cells with supplied
// halfspaces, fan triangulations, halfspace clipping, and subdivision
// validation.

namespace lcde {

// Points within kCoplanarTol (relative to the hull's coordinate scale) of a
// facet plane are treated as lying on it.
inline constexpr double kCoplanarTol = 1e-10;

// { x : dot(normal, x) <= offset }
struct HalfSpace {
  Vec normal;
  double offset = 0.0;

  HalfSpace() = default;
  HalfSpace(const Vec& n, double b) : normal(n), offset(b) {}
  // Positive outside, negative inside.
  double eval(const Vec& x) const { return dot(normal, x) - offset; }
};

struct Simplex {
  std::array<Vec, kMaxDim + 1> v{};
  int d = 0;

  Simplex() = default;
  Simplex(std::initializer_list<Vec> vs) {
    d = static_cast<int>(vs.size()) - 1;
    int i = 0;
    for (const Vec& x : vs) v[i++] = x;
  }
  int nverts() const { return d + 1; }
  double volume() const;
  Vec centroid() const;
  // Barycentric coordinates of x; components may be negative outside.
  bool barycentric(const Vec& x, std::array<double, kMaxDim + 1>& bary) const;
  bool contains(const Vec& x, double tol = 1e-9) const;
  Vec sample_uniform(Rng& rng) const;
};

// Convex hull of a point set, with both the simplicial facet list and the
// merged (coplanar-grouped) facet list. Vertex entries are indices into the
// input point array.
struct Hull {
  int dim = 0;
  std::vector<Vec> points;                      // copy of the input
  std::vector<int> vertices;                    // extreme points, ascending
  std::vector<std::array<int, 4>> simplices;    // simplicial facets (dim ids each)
  std::vector<HalfSpace> simplex_planes;        // outward plane per simplicial facet
  std::vector<std::vector<int>> facets;         // merged facets; d=3: cyclic order
  std::vector<HalfSpace> facet_planes;          // outward plane per merged facet
  Vec interior;                                 // strictly interior point

  double volume() const;
};

// Throws DegenerateInput if the points are affinely dependent (not
// full-dimensional in their ambient space).
Hull convex_hull(const std::vector<Vec>& pts);

// Bounded polytope: conv(vertices). Halfspaces, triangulation and volume are
// derived from the hull on first use. Unbounded cells (vertices + recession
// rays) must supply their halfspaces explicitly; facet counts follow them.
class Polytope {
 public:
  Polytope() = default;
  explicit Polytope(std::vector<Vec> verts);
  Polytope(std::vector<Vec> verts, std::vector<Vec> rays,
           std::vector<HalfSpace> halfspaces);

  int dim() const { return d_; }
  bool bounded() const { return rays_.empty(); }
  const std::vector<Vec>& vertices() const { return verts_; }
  const std::vector<Vec>& rays() const { return rays_; }
  const std::vector<HalfSpace>& facets() const;
  int facet_count() const { return static_cast<int>(facets().size()); }
  const Hull& hull() const;  // bounded only

  bool contains(const Vec& x, double tol = 1e-9) const;
  double volume() const;  // bounded only
  Vec vertex_centroid() const;
  // Deterministic fan triangulation: facets are fanned from their
  // lowest-index vertex, then coned to the polytope's lowest-index vertex.
  const std::vector<Simplex>& triangulation() const;

 private:
  int d_ = 0;
  std::vector<Vec> verts_;
  std::vector<Vec> rays_;
  mutable std::optional<Hull> hull_;
  mutable std::vector<HalfSpace> facets_;
  mutable bool have_facets_ = false;
  mutable std::vector<Simplex> tris_;
  mutable bool have_tris_ = false;
};

struct Subdivision {
  std::vector<Polytope> cells;
};

// Sum of facet counts over all cells.
long long gamma(const Subdivision& s);

struct SubdivisionReport {
  bool ok = true;
  std::vector<std::string> violations;
  double coverage = 0.0;  // MC estimate of covered fraction of the ambient set
};

// Checks (a) pairwise disjoint interiors via random interior probes,
// (b) union coverage of `ambient` via Monte Carlo volume (0.5% tolerance),
// (c) conformity: no vertex of one cell in the relative interior of another
// cell's facet or edge. Only bounded cells participate in (a)/(b) probes.
SubdivisionReport validate_subdivision(const Subdivision& s,
                                       const Polytope& ambient, uint64_t seed,
                                       int probes_per_cell = 64,
                                       int coverage_samples = 20000,
                                       bool check_conformity = true);

struct EulerReport {
  bool ok = false;
  int v = 0, e = 0, f = 0;
  long long triangulation_cells = 0;
  std::string detail;
};

// d=3 combinatorial checks: v - e + f == 2, v <= 2f - 4, f <= 2v - 4, and the
// fan triangulation has at most 3v - 11 tetrahedra (v >= 4).
EulerReport euler_check(const Polytope& p);

// Fan triangulation of a hull (shared by Polytope::triangulation and tests).
std::vector<Simplex> triangulate(const Hull& h);

// Clip a bounded polytope by one halfspace. Returns nullopt when the result
// is empty or lower-dimensional. Exact edge-crossing interpolation.
std::optional<Polytope> clip(const Polytope& p, const HalfSpace& hs,
                             double tol = 1e-12);

// Intersect a bounded polytope with a list of halfspaces (iterated clipping).
std::optional<Polytope> intersect(const Polytope& p,
                                  const std::vector<HalfSpace>& hs,
                                  double tol = 1e-12);

// Intersection of two cells sharing an ambient dimension; both may be
// unbounded (halfspaces required), but the result must be bounded or empty
// unless both inputs' recession cones share directions, in which case the
// caller is expected to pre-truncate. Returns nullopt for empty or
// lower-dimensional intersections.
std::optional<Polytope> intersect_cells(const Polytope& a, const Polytope& b);

// Uniform point in a bounded polytope (triangulation + simplex sampling).
Vec sample_uniform(const Polytope& p, Rng& rng);

}  // namespace lcde
