#pragma once

// Independent cross-check helpers for the unit and acceptance suites:
// Monte Carlo volumes, randomized support-function hull checks, and small
// closed-form references. Kept header-only and dependency-free on purpose so
// oracle logic stays separate from the code under test.

#include <functional>

#include "lcde/core.hpp"
#include "lcde/geometry.hpp"

namespace oracle {

using lcde::Rng;
using lcde::Vec;

struct Box {
  Vec lo, hi;
};

inline Box bounding_box(const std::vector<Vec>& pts, double pad = 0.0) {
  Box b;
  b.lo = pts[0];
  b.hi = pts[0];
  for (const Vec& p : pts)
    for (int j = 0; j < p.dim(); ++j) {
      b.lo.c[j] = std::min(b.lo.c[j], p.c[j]);
      b.hi.c[j] = std::max(b.hi.c[j], p.c[j]);
    }
  for (int j = 0; j < b.lo.dim(); ++j) {
    b.lo.c[j] -= pad;
    b.hi.c[j] += pad;
  }
  return b;
}

inline Vec sample_box(const Box& b, Rng& rng) {
  Vec x(b.lo.dim());
  for (int j = 0; j < x.dim(); ++j) x.c[j] = rng.uniform(b.lo.c[j], b.hi.c[j]);
  return x;
}

inline double box_volume(const Box& b) {
  double v = 1;
  for (int j = 0; j < b.lo.dim(); ++j) v *= (b.hi.c[j] - b.lo.c[j]);
  return v;
}

// MC volume of {x : member(x)} inside the box; also reports the standard
// error so callers can use sigma-scaled tolerances.
struct McVolume {
  double value = 0, se = 0;
};
inline McVolume mc_volume(const Box& b, const std::function<bool(const Vec&)>& member,
                          int n, uint64_t seed) {
  Rng rng(seed);
  int hits = 0;
  for (int i = 0; i < n; ++i)
    if (member(sample_box(b, rng))) ++hits;
  double p = (double)hits / n;
  McVolume r;
  r.value = p * box_volume(b);
  r.se = std::sqrt(std::max(p * (1 - p), 1e-12) / n) * box_volume(b);
  return r;
}

// Support-function check: every input point must be dominated by the claimed
// vertex set in many random directions. Returns the worst violation (positive
// means some point sticks out beyond the claimed hull).
inline double support_violation(const std::vector<Vec>& points,
                                const std::vector<Vec>& claimed_vertices,
                                int directions, uint64_t seed) {
  Rng rng(seed);
  const int d = points[0].dim();
  double worst = -1e300;
  for (int it = 0; it < directions; ++it) {
    Vec u(d);
    for (int j = 0; j < d; ++j) u.c[j] = rng.normal();
    u *= 1.0 / lcde::norm(u);
    double hv = -1e300;
    for (const Vec& v : claimed_vertices) hv = std::max(hv, dot(u, v));
    for (const Vec& p : points) worst = std::max(worst, dot(u, p) - hv);
  }
  return worst;
}

}  // namespace oracle
