#pragma once

#include <array>
#include <cmath>

namespace finsleray {

using Vec3 = std::array<double, 3>;
using Vec6 = std::array<double, 6>;
using Mat3 = std::array<std::array<double, 3>, 3>;

template <class T>
using Vec3T = std::array<T, 3>;
template <class T>
using Mat3T = std::array<std::array<T, 3>, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double k, const Vec3& a) { return {k * a[0], k * a[1], k * a[2]}; }
inline Vec3 operator-(const Vec3& a) { return {-a[0], -a[1], -a[2]}; }

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline Vec3 normalized(const Vec3& a) { return (1.0 / norm(a)) * a; }

inline Vec3 matvec(const Mat3& m, const Vec3& v) {
  Vec3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i] += m[i][j] * v[j];
  return r;
}

inline Mat3 matmul(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
  return r;
}

inline double quadratic_form(const Mat3& m, const Vec3& v) { return dot(v, matvec(m, v)); }

template <class T>
T det3(const Mat3T<T>& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

// adjugate-based inverse; works for scalar and jet entries
template <class T>
Mat3T<T> inverse3(const Mat3T<T>& m) {
  T d = det3(m);
  Mat3T<T> r;
  r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / d;
  r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / d;
  r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / d;
  r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / d;
  r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / d;
  r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / d;
  r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / d;
  r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / d;
  r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / d;
  return r;
}

// eigenvalues of a symmetric 3x3, ascending; trigonometric closed form
inline Vec3 sym3_eigenvalues(const Mat3& a) {
  double p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
  double q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
  if (p1 == 0.0) {
    Vec3 e{a[0][0], a[1][1], a[2][2]};
    if (e[0] > e[1]) std::swap(e[0], e[1]);
    if (e[1] > e[2]) std::swap(e[1], e[2]);
    if (e[0] > e[1]) std::swap(e[0], e[1]);
    return e;
  }
  double p2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    double d = a[i][i] - q;
    p2 += d * d;
  }
  p2 += 2.0 * p1;
  double p = std::sqrt(p2 / 6.0);
  Mat3 b{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) b[i][j] = (a[i][j] - (i == j ? q : 0.0)) / p;
  double r = det3(b) / 2.0;
  r = std::max(-1.0, std::min(1.0, r));
  double phi = std::acos(r) / 3.0;
  double e3 = q + 2.0 * p * std::cos(phi);
  double e1 = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
  double e2 = 3.0 * q - e1 - e3;
  return {e1, e2, e3};
}

inline double min_eigenvalue_sym3(const Mat3& a) { return sym3_eigenvalues(a)[0]; }

inline constexpr double levi_civita(int i, int j, int k) {
  if (i == j || j == k || i == k) return 0.0;
  // parity of the permutation (i j k) of (0 1 2)
  return ((j - i + 3) % 3 == 1) ? 1.0 : -1.0;
}

}  // namespace finsleray
