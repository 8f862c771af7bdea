#include "lcde/quadrature.hpp"

#include <map>
#include <mutex>

namespace lcde {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
  static std::mutex mu;
  {
    std::lock_guard<std::mutex> lk(mu);
    auto it = cache.find(n);
    if (it != cache.end()) {
      nodes = it->second.first;
      weights = it->second.second;
      return;
    }
  }
  std::vector<double> x(n), w(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Chebyshev-like initial guess, then Newton on P_n.
    double z = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
    double pp = 0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      double z1 = z;
      z = z1 - p1 / pp;
      if (std::fabs(z - z1) < 1e-15) break;
    }
    double p1 = 1.0, p2 = 0.0;
    for (int j = 0; j < n; ++j) {
      double p3 = p2;
      p2 = p1;
      p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
    }
    pp = n * (z * p1 - p2) / (z * z - 1.0);
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
  {
    std::lock_guard<std::mutex> lk(mu);
    cache[n] = {x, w};
  }
  nodes = x;
  weights = w;
}

namespace {

double gl_interval(double a, double b, const std::function<double(double)>& f, int n) {
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0;
  for (int i = 0; i < n; ++i) s += w[i] * f(mid + half * x[i]);
  return s * half;
}

double adaptive_interval(double a, double b, const std::function<double(double)>& f,
                         double tol_abs, int depth, int max_depth) {
  double c7 = gl_interval(a, b, f, 7);
  double c15 = gl_interval(a, b, f, 15);
  if (std::fabs(c15 - c7) <= tol_abs || depth >= max_depth) return c15;
  double m = 0.5 * (a + b);
  return adaptive_interval(a, m, f, 0.5 * tol_abs, depth + 1, max_depth) +
         adaptive_interval(m, b, f, 0.5 * tol_abs, depth + 1, max_depth);
}

// Duffy-mapped tensor Gauss rule on a simplex.
double duffy_rule(const Simplex& s, const ScalarField& f, int n) {
  const int d = s.d;
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  std::vector<double> u(n), uw(n);
  for (int i = 0; i < n; ++i) {
    u[i] = 0.5 * (x[i] + 1.0);  // map to (0,1)
    uw[i] = 0.5 * w[i];
  }
  double fact = 1;
  for (int i = 2; i <= d; ++i) fact *= i;
  const double scale = fact * s.volume();

  double total = 0;
  if (d == 1) {
    for (int i = 0; i < n; ++i) {
      double l1 = u[i];
      Vec p = s.v[0] + l1 * (s.v[1] - s.v[0]);
      total += uw[i] * f(p);
    }
  } else if (d == 2) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double l1 = u[i];
        double l2 = u[j] * (1 - u[i]);
        double jac = (1 - u[i]);
        Vec p = s.v[0] + l1 * (s.v[1] - s.v[0]) + l2 * (s.v[2] - s.v[0]);
        total += uw[i] * uw[j] * jac * f(p);
      }
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double l1 = u[i];
          double l2 = u[j] * (1 - u[i]);
          double l3 = u[k] * (1 - u[i]) * (1 - u[j]);
          double jac = (1 - u[i]) * (1 - u[i]) * (1 - u[j]);
          Vec p = s.v[0] + l1 * (s.v[1] - s.v[0]) + l2 * (s.v[2] - s.v[0]) +
                  l3 * (s.v[3] - s.v[0]);
          total += uw[i] * uw[j] * uw[k] * jac * f(p);
        }
  }
  return scale * total;
}

double adaptive_simplex(const Simplex& s, const ScalarField& f, double tol_abs,
                        int depth, int max_depth) {
  double c = duffy_rule(s, f, 6);
  double fine = duffy_rule(s, f, 10);
  if (std::fabs(fine - c) <= tol_abs || depth >= max_depth) return fine;
  double sum = 0;
  auto kids = red_refine(s);
  double kid_tol = tol_abs / (double)kids.size();
  for (const Simplex& k : kids) sum += adaptive_simplex(k, f, kid_tol, depth + 1, max_depth);
  return sum;
}

}  // namespace

std::vector<Simplex> red_refine(const Simplex& s) {
  const int d = s.d;
  std::vector<Simplex> out;
  auto mid = [&](int i, int j) { return 0.5 * (s.v[i] + s.v[j]); };
  if (d == 1) {
    Vec m = mid(0, 1);
    out.push_back({s.v[0], m});
    out.push_back({m, s.v[1]});
  } else if (d == 2) {
    Vec m01 = mid(0, 1), m02 = mid(0, 2), m12 = mid(1, 2);
    out.push_back({s.v[0], m01, m02});
    out.push_back({s.v[1], m01, m12});
    out.push_back({s.v[2], m02, m12});
    out.push_back({m01, m02, m12});
  } else {
    Vec m01 = mid(0, 1), m02 = mid(0, 2), m03 = mid(0, 3);
    Vec m12 = mid(1, 2), m13 = mid(1, 3), m23 = mid(2, 3);
    out.push_back({s.v[0], m01, m02, m03});
    out.push_back({s.v[1], m01, m12, m13});
    out.push_back({s.v[2], m02, m12, m23});
    out.push_back({s.v[3], m03, m13, m23});
    // Central octahedron split around the m02-m13 diagonal; the equator cycle
    // is m01 -> m03 -> m23 -> m12.
    out.push_back({m02, m13, m01, m03});
    out.push_back({m02, m13, m03, m23});
    out.push_back({m02, m13, m23, m12});
    out.push_back({m02, m13, m12, m01});
  }
  return out;
}

double integrate_interval(double a, double b, const std::function<double(double)>& f,
                          double rel_tol, int max_depth) {
  double rough = std::fabs(gl_interval(a, b, f, 15));
  double tol = rel_tol * std::max(rough, 1e-12);
  return adaptive_interval(a, b, f, tol, 0, max_depth);
}

double integrate_simplex(const Simplex& s, const ScalarField& f, double rel_tol,
                         int max_depth) {
  double rough = std::fabs(duffy_rule(s, f, 10));
  double tol = rel_tol * std::max(rough, 1e-14);
  return adaptive_simplex(s, f, tol, 0, max_depth);
}

double integrate_polytope(const Polytope& p, const ScalarField& f, double rel_tol,
                          int max_depth) {
  double total = 0;
  for (const Simplex& s : p.triangulation())
    total += integrate_simplex(s, f, rel_tol, max_depth);
  return total;
}

}  // namespace lcde
