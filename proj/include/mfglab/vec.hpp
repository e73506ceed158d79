#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>

namespace mfglab {

// Small fixed-capacity point/covector type. Every scenario in this library
// lives in dimension 1 or 2, so a heap-free value type keeps the solvers
// allocation-free on their hot paths.
struct Vec {
  int n = 1;
  std::array<double, 2> c{0.0, 0.0};

  Vec() = default;
  explicit Vec(double x) : n(1), c{x, 0.0} {}
  Vec(double x, double y) : n(2), c{x, y} {}
  static Vec zero(int dim) {
    Vec v;
    v.n = dim;
    return v;
  }

  double& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return c[static_cast<std::size_t>(i)]; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < n; ++i) c[i] += o.c[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < n; ++i) c[i] -= o.c[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (int i = 0; i < n; ++i) c[i] *= s;
    return *this;
  }
};

inline Vec operator+(Vec a, const Vec& b) { return a += b; }
inline Vec operator-(Vec a, const Vec& b) { return a -= b; }
inline Vec operator*(double s, Vec a) { return a *= s; }
inline Vec operator*(Vec a, double s) { return a *= s; }
inline Vec operator/(Vec a, double s) { return a *= 1.0 / s; }
inline Vec operator-(Vec a) { return a *= -1.0; }

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (int i = 0; i < a.n; ++i) s += a[i] * b[i];
  return s;
}
inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }
inline double norm_sq(const Vec& a) { return dot(a, a); }

inline Vec normalized(const Vec& a) {
  double r = norm(a);
  return r > 0.0 ? a / r : a;
}

// Counter-clockwise rotation by 90 degrees; the canonical tangent for a
// 2D outward normal.
inline Vec perp(const Vec& a) { return Vec(-a[1], a[0]); }

inline std::ostream& operator<<(std::ostream& os, const Vec& v) {
  os << '(';
  for (int i = 0; i < v.n; ++i) os << (i ? "," : "") << v[i];
  return os << ')';
}

// Symmetric n x n matrix, n <= 2.
struct Mat {
  int n = 1;
  std::array<std::array<double, 2>, 2> a{{{0.0, 0.0}, {0.0, 0.0}}};

  static Mat zero(int dim) {
    Mat m;
    m.n = dim;
    return m;
  }
  static Mat identity(int dim) {
    Mat m = zero(dim);
    for (int i = 0; i < dim; ++i) m.a[i][i] = 1.0;
    return m;
  }
  static Mat outer(const Vec& u, const Vec& v) {
    Mat m = zero(u.n);
    for (int i = 0; i < u.n; ++i)
      for (int j = 0; j < u.n; ++j) m.a[i][j] = u[i] * v[j];
    return m;
  }

  double& operator()(int i, int j) { return a[i][j]; }
  double operator()(int i, int j) const { return a[i][j]; }

  Mat& operator+=(const Mat& o) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a[i][j] += o.a[i][j];
    return *this;
  }
  Mat& operator*=(double s) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a[i][j] *= s;
    return *this;
  }
};

inline Mat operator+(Mat a, const Mat& b) { return a += b; }
inline Mat operator*(double s, Mat a) { return a *= s; }

inline Vec mul(const Mat& m, const Vec& v) {
  Vec r = Vec::zero(v.n);
  for (int i = 0; i < v.n; ++i)
    for (int j = 0; j < v.n; ++j) r[i] += m(i, j) * v[j];
  return r;
}

inline Mat transpose(const Mat& m) {
  Mat r = Mat::zero(m.n);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) r(i, j) = m(j, i);
  return r;
}

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat r = Mat::zero(a.n);
  for (int i = 0; i < a.n; ++i)
    for (int j = 0; j < a.n; ++j)
      for (int k = 0; k < a.n; ++k) r(i, j) += a(i, k) * b(k, j);
  return r;
}

}  // namespace mfglab
