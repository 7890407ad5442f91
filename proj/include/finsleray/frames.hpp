#pragma once

#include "finsleray/geometry.hpp"

namespace finsleray {

// g-orthonormal frame adapted to the support direction: e[2] (third row,
// index a=2) is u itself; rows are frame vectors e_a^i, omega is the inverse
// coframe omega^a_i. Positively oriented: det(e_a^i) > 0.
struct OrthonormalFrame {
  double e[3][3]{};
  double omega[3][3]{};
};

inline OrthonormalFrame adapted_frame(const Mat3& g, const Vec3& u, int seed_axis = 0) {
  Vec3 gu = matvec(g, u);
  double un = std::sqrt(dot(u, gu));
  if (!(un > 0.0)) throw DegenerateSeed("support direction has non-positive g-norm");
  Vec3 e3 = (1.0 / un) * u;

  Vec3 basis[3];
  int found = 0;
  Vec3 es[2];
  for (int attempt = 0; attempt < 3 && found < 2; ++attempt) {
    int axis = (seed_axis + attempt) % 3;
    Vec3 v{};
    v[axis] = 1.0;
    // g-orthogonalize against e3 and any frame vector found so far
    Vec3 w = v - dot(v, matvec(g, e3)) * e3;
    for (int k = 0; k < found; ++k) w = w - dot(w, matvec(g, es[k])) * es[k];
    double n2 = dot(w, matvec(g, w));
    if (n2 < 1e-18) continue;  // seed parallel to the span built so far
    es[found++] = (1.0 / std::sqrt(n2)) * w;
  }
  if (found < 2) throw DegenerateSeed("could not complete g-orthonormal frame");
  basis[0] = es[0];
  basis[1] = es[1];
  basis[2] = e3;

  // enforce positive orientation by flipping e1 if needed
  Mat3 m;
  for (int a = 0; a < 3; ++a)
    for (int i = 0; i < 3; ++i) m[a][i] = basis[a][i];
  if (det3(m) < 0.0) {
    basis[0] = -basis[0];
    for (int i = 0; i < 3; ++i) m[0][i] = basis[0][i];
  }

  OrthonormalFrame f;
  for (int a = 0; a < 3; ++a)
    for (int i = 0; i < 3; ++i) f.e[a][i] = basis[a][i];
  // omega^a_i: inverse of the matrix with columns e_a (i.e. of m transposed)
  Mat3 et;
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 3; ++a) et[i][a] = m[a][i];
  Mat3 inv = inverse3(et);
  for (int a = 0; a < 3; ++a)
    for (int i = 0; i < 3; ++i) f.omega[a][i] = inv[a][i];
  return f;
}

}  // namespace finsleray
