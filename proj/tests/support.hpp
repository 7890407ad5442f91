#pragma once

// Test-side oracles, independent of the jet implementation paths they check:
// Richardson-extrapolated central differences for partial derivatives, and a
// classical curvature oracle for position-dependent metrics built from
// finite differences of the Christoffel symbols.

#include <functional>

#include "finsleray/media.hpp"

namespace oracle {

using finsleray::Mat3;
using finsleray::MultiIndex;
using finsleray::Vec3;
using finsleray::Vec6;
using finsleray::operator+;
using finsleray::operator-;
using finsleray::operator*;

using Field6 = std::function<double(const Vec6&)>;

// step schedule per total derivative order; first order follows the
// documented 1e-5 step, higher orders back off to keep the rounding noise
// of the nested stencils below the comparison tolerance (noise floor is
// roughly eps/h^order; the floors used in the assertions reflect that)
inline double fd_step(int total_order) {
  switch (total_order) {
    case 1:
      return 1e-5;
    case 2:
      return 2e-3;
    case 3:
      return 8e-3;
    default:
      return 1.6e-2;
  }
}

// two-level Richardson extrapolation of the central difference: O(h^6)
inline double central1(const std::function<double(double)>& g, double h) {
  auto d = [&](double step) { return (g(step) - g(-step)) / (2.0 * step); };
  double dh = d(h), dh2 = d(0.5 * h), dh4 = d(0.25 * h);
  double r1 = (4.0 * dh2 - dh) / 3.0;
  double r2 = (4.0 * dh4 - dh2) / 3.0;
  return (16.0 * r2 - r1) / 15.0;
}

// mixed partial via nested differences, outermost variable first
inline double fd_partial(const Field6& f, const Vec6& p, MultiIndex idx, int total_order = -1) {
  if (total_order < 0) total_order = idx.degree();
  if (idx.degree() == 0) return f(p);
  int var = 0;
  while (idx.e[static_cast<std::size_t>(var)] == 0) ++var;
  MultiIndex rest = idx;
  rest.e[static_cast<std::size_t>(var)]--;
  double h = fd_step(total_order);
  auto g = [&](double step) {
    Vec6 q = p;
    q[static_cast<std::size_t>(var)] += step;
    return fd_partial(f, q, rest, total_order);
  };
  return central1(g, h);
}

inline Field6 metric_f2_field(const finsleray::Metric& metric) {
  return [metric](const Vec6& p) {
    return metric.f2({p[0], p[1], p[2]}, {p[3], p[4], p[5]});
  };
}

// ---------------------------------------------------------------------------
// classical Riemannian curvature from finite differences in x only; used to
// cross-check the jet pipeline on y-independent metrics

using MetricFn = std::function<Mat3(const Vec3&)>;

inline Mat3 fd_christoffel(const MetricFn& g_of_x, const Vec3& x, int upper) {
  double h = 1e-5;
  Mat3 g = g_of_x(x);
  Mat3 gi = finsleray::inverse3(g);
  double dg[3][3][3];  // dg[i][j][k] = d g_ij / d x^k
  for (int k = 0; k < 3; ++k) {
    auto gk = [&](double step) {
      Vec3 q = x;
      q[k] += step;
      return g_of_x(q);
    };
    Mat3 gp = gk(h), gm = gk(-h), gp2 = gk(0.5 * h), gm2 = gk(-0.5 * h);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double dh = (gp[i][j] - gm[i][j]) / (2 * h);
        double dh2 = (gp2[i][j] - gm2[i][j]) / h;
        dg[i][j][k] = (4 * dh2 - dh) / 3.0;
      }
  }
  Mat3 gamma{};
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      double acc = 0.0;
      for (int l = 0; l < 3; ++l)
        acc += gi[upper][l] * (dg[k][l][j] + dg[j][l][k] - dg[j][k][l]);
      gamma[j][k] = 0.5 * acc;
    }
  return gamma;
}

struct RiemannOracle {
  double gamma[3][3][3];
  double riemann[3][3][3][3];
};

inline RiemannOracle fd_riemann(const MetricFn& g_of_x, const Vec3& x) {
  RiemannOracle out{};
  for (int i = 0; i < 3; ++i) {
    Mat3 gm = fd_christoffel(g_of_x, x, i);
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) out.gamma[i][j][k] = gm[j][k];
  }
  double h = 2e-4;
  double dgamma[3][3][3][3];  // d Gamma^i_{jl} / d x^k
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) {
      auto gk = [&](double step) {
        Vec3 q = x;
        q[k] += step;
        return fd_christoffel(g_of_x, q, i);
      };
      Mat3 gp = gk(h), gmm = gk(-h), gp2 = gk(0.5 * h), gm2 = gk(-0.5 * h);
      for (int j = 0; j < 3; ++j)
        for (int l = 0; l < 3; ++l) {
          double dh = (gp[j][l] - gmm[j][l]) / (2 * h);
          double dh2 = (gp2[j][l] - gm2[j][l]) / h;
          dgamma[i][j][l][k] = (4 * dh2 - dh) / 3.0;
        }
    }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          double r = dgamma[i][j][l][k] - dgamma[i][j][k][l];
          for (int m = 0; m < 3; ++m)
            r += out.gamma[i][m][k] * out.gamma[m][j][l] - out.gamma[i][m][l] * out.gamma[m][j][k];
          out.riemann[i][j][k][l] = r;
        }
  return out;
}

// ---------------------------------------------------------------------------
// point-set distance between sampled curves

inline double point_to_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  Vec3 ab = b - a;
  double len2 = finsleray::dot(ab, ab);
  if (len2 < 1e-30) return finsleray::norm(p - a);
  double t = finsleray::dot(p - a, ab) / len2;
  t = std::max(0.0, std::min(1.0, t));
  return finsleray::norm(p - (a + t * ab));
}

inline double point_to_polyline(const Vec3& p, const std::vector<Vec3>& poly) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < poly.size(); ++i)
    best = std::min(best, point_to_segment(p, poly[i], poly[i + 1]));
  return best;
}

}  // namespace oracle
