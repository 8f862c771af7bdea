#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

// Core value types and numeric helpers shared by every module.
//
// Ambient dimensions are tiny (data lives in R^1..R^3, lifted hulls in up to
// R^4), so points are fixed-capacity stack values and the dense linear algebra
// is written out for sizes <= 4 instead of pulling in a matrix library.

namespace lcde {

inline constexpr int kMaxDim = 4;

// ---------------------------------------------------------------------------
// Errors

struct DegenerateInput : std::invalid_argument {
  explicit DegenerateInput(const std::string& w) : std::invalid_argument(w) {}
};
struct NotIntegrable : std::domain_error {
  explicit NotIntegrable(const std::string& w) : std::domain_error(w) {}
};
struct NotConcave : std::domain_error {
  explicit NotConcave(const std::string& w) : std::domain_error(w) {}
};
struct EmptyClass : std::domain_error {
  explicit EmptyClass(const std::string& w) : std::domain_error(w) {}
};
struct OutOfRange : std::out_of_range {
  explicit OutOfRange(const std::string& w) : std::out_of_range(w) {}
};
struct NotNested : std::invalid_argument {
  explicit NotNested(const std::string& w) : std::invalid_argument(w) {}
};
struct InvalidSample : std::invalid_argument {
  explicit InvalidSample(const std::string& w) : std::invalid_argument(w) {}
};
struct MissingConstant : std::invalid_argument {
  explicit MissingConstant(const std::string& w) : std::invalid_argument(w) {}
};

// ---------------------------------------------------------------------------
// Fixed-capacity point / vector

struct Vec {
  std::array<double, kMaxDim> c{0.0, 0.0, 0.0, 0.0};
  int d = 0;

  Vec() = default;
  explicit Vec(int dim) : d(dim) {}
  Vec(std::initializer_list<double> xs) {
    d = static_cast<int>(xs.size());
    int i = 0;
    for (double v : xs) c[i++] = v;
  }
  static Vec from(const std::vector<double>& xs) {
    Vec v(static_cast<int>(xs.size()));
    for (int i = 0; i < v.d; ++i) v.c[i] = xs[i];
    return v;
  }
  std::vector<double> to_vector() const { return {c.begin(), c.begin() + d}; }

  double& operator[](int i) { return c[i]; }
  double operator[](int i) const { return c[i]; }
  int dim() const { return d; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < d; ++i) c[i] += o.c[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < d; ++i) c[i] -= o.c[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (int i = 0; i < d; ++i) c[i] *= s;
    return *this;
  }
};

inline Vec operator+(Vec a, const Vec& b) { return a += b; }
inline Vec operator-(Vec a, const Vec& b) { return a -= b; }
inline Vec operator*(double s, Vec a) { return a *= s; }
inline Vec operator*(Vec a, double s) { return a *= s; }

inline double dot(const Vec& a, const Vec& b) {
  double s = 0;
  for (int i = 0; i < a.d; ++i) s += a.c[i] * b.c[i];
  return s;
}
inline double norm2(const Vec& a) { return dot(a, a); }
inline double norm(const Vec& a) { return std::sqrt(norm2(a)); }
inline double dist(const Vec& a, const Vec& b) { return norm(a - b); }

inline bool lex_less(const Vec& a, const Vec& b) {
  for (int i = 0; i < a.d; ++i) {
    if (a.c[i] < b.c[i]) return true;
    if (a.c[i] > b.c[i]) return false;
  }
  return false;
}

// Append one coordinate (used when lifting data points by their heights).
inline Vec lift(const Vec& x, double h) {
  Vec v(x.d + 1);
  for (int i = 0; i < x.d; ++i) v.c[i] = x.c[i];
  v.c[x.d] = h;
  return v;
}
// Drop the last coordinate.
inline Vec project(const Vec& x) {
  Vec v(x.d - 1);
  for (int i = 0; i < v.d; ++i) v.c[i] = x.c[i];
  return v;
}

// ---------------------------------------------------------------------------
// Small dense linear algebra (sizes 1..4)

namespace lin {

using Mat = std::array<std::array<double, kMaxDim>, kMaxDim>;

inline double det(const Mat& m, int n) {
  switch (n) {
    case 1:
      return m[0][0];
    case 2:
      return m[0][0] * m[1][1] - m[0][1] * m[1][0];
    case 3:
      return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
             m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
             m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    case 4: {
      double d = 0;
      for (int j = 0; j < 4; ++j) {
        Mat sub{};
        for (int r = 1; r < 4; ++r) {
          int cc = 0;
          for (int col = 0; col < 4; ++col) {
            if (col == j) continue;
            sub[r - 1][cc++] = m[r][col];
          }
        }
        double cof = m[0][j] * det(sub, 3);
        d += (j % 2 == 0) ? cof : -cof;
      }
      return d;
    }
    default:
      throw OutOfRange("lin::det: size must be 1..4");
  }
}

// Solve A x = b by partial-pivot elimination. Returns false if A is singular
// relative to scale.
inline bool solve(Mat a, Vec b, int n, Vec& out) {
  std::array<int, kMaxDim> piv{0, 1, 2, 3};
  for (int k = 0; k < n; ++k) {
    int p = k;
    for (int r = k + 1; r < n; ++r)
      if (std::fabs(a[r][k]) > std::fabs(a[p][k])) p = r;
    if (p != k) {
      std::swap(a[p], a[k]);
      std::swap(b.c[p], b.c[k]);
      std::swap(piv[p], piv[k]);
    }
    if (std::fabs(a[k][k]) < 1e-300) return false;
    for (int r = k + 1; r < n; ++r) {
      double f = a[r][k] / a[k][k];
      for (int col = k; col < n; ++col) a[r][col] -= f * a[k][col];
      b.c[r] -= f * b.c[k];
    }
  }
  out = Vec(n);
  for (int k = n - 1; k >= 0; --k) {
    double s = b.c[k];
    for (int col = k + 1; col < n; ++col) s -= a[k][col] * out.c[col];
    out.c[k] = s / a[k][k];
  }
  return true;
}

// Cholesky factor L (lower) of a SPD matrix; returns false if not SPD.
inline bool cholesky(const Mat& a, int n, Mat& l) {
  l = Mat{};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a[i][j];
      for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      if (i == j) {
        if (s <= 0) return false;
        l[i][i] = std::sqrt(s);
      } else {
        l[i][j] = s / l[j][j];
      }
    }
  }
  return true;
}

// Inverse via solves against unit vectors.
inline bool inverse(const Mat& a, int n, Mat& inv) {
  inv = Mat{};
  for (int j = 0; j < n; ++j) {
    Vec e(n), x;
    e.c[j] = 1.0;
    if (!solve(a, e, n, x)) return false;
    for (int i = 0; i < n; ++i) inv[i][j] = x.c[i];
  }
  return true;
}

inline Vec matvec(const Mat& a, const Vec& x, int n) {
  Vec y(n);
  for (int i = 0; i < n; ++i) {
    double s = 0;
    for (int j = 0; j < n; ++j) s += a[i][j] * x.c[j];
    y.c[i] = s;
  }
  return y;
}

}  // namespace lin

// ---------------------------------------------------------------------------
// Deterministic RNG
//
// Engine is mt19937_64 but every variate is produced by an explicit transform
// of 53-bit uniforms, so streams do not depend on the standard library's
// (unspecified) distribution algorithms.

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(splitmix64(seed)) {}

  uint64_t raw() { return eng_(); }

  // Uniform on (0,1): 53 random bits, offset so 0 is excluded.
  double u01() { return ((eng_() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * u01(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u = u01(), v = u01();
    double r = std::sqrt(-2.0 * std::log(u));
    double th = 6.283185307179586476925286766559 * v;
    spare_ = r * std::sin(th);
    have_spare_ = true;
    return r * std::cos(th);
  }

  double expo() { return -std::log(u01()); }

  // Gamma(k) for small integer k as a sum of exponentials.
  double gamma_int(int k) {
    double s = 0;
    for (int i = 0; i < k; ++i) s += expo();
    return s;
  }

  uint64_t below(uint64_t n) { return eng_() % n; }  // n tiny, bias negligible

  // Derived child stream; (seed, salt) pairs give independent streams.
  static uint64_t derive(uint64_t seed, uint64_t salt) {
    return splitmix64(seed ^ splitmix64(salt * 0x9e3779b97f4a7c15ULL + 0x243f6a8885a308d3ULL));
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// ---------------------------------------------------------------------------
// Misc numeric helpers

inline double sqr(double x) { return x * x; }

template <typename T>
inline T clamp(T v, T lo, T hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

inline bool close_rel(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

}  // namespace lcde
