#pragma once

#include "finsleray/media.hpp"

namespace finsleray {

// Tensor index layout throughout: the contravariant index comes first, the
// remaining slots follow the structure-equation order. So Gamma[i][j][k]
// holds the connection coefficient with upper index i and lower pair (j,k),
// R[i][j][k][l] the hh-curvature with upper i, lower j and form indices
// (k,l), and P[i][j][k][l] the hv-curvature -F dGamma^i_{jk}/dy^l.

struct MetricSample {
  double F = 0.0;
  Mat3 g{}, g_inv{};
  Vec3 u{}, u_flat{};
  double sqrt_det_g = 0.0;
};

struct CartanSample {
  double C[3][3][3]{};  // (F^2/4)_{y^i y^j y^k}
  double A[3][3][3]{};  // F C_{ijk}
};

struct ConnectionSample {
  Vec3 G{};              // spray coefficients, degree-2 homogeneous in y
  double N[3][3]{};      // nonlinear connection N^i_j = dG^i/dy^j / 2
  double Gamma[3][3][3]{};
};

struct ChernCurvatureSample {
  double R[3][3][3][3]{};
  double P[3][3][3][3]{};
};

struct CartanCurvatureSample {
  double Rhat[3][3][3][3]{};
  double Phat[3][3][3][3]{};
  double Qhat[3][3][3][3]{};
  double A_cov[3][3][3][3]{};   // A_{ijk|l}, horizontal covariant derivative
  double A_dot[3][3][3]{};      // A_{ijk|l} u^l
  double A_vert[3][3][3][3]{};  // F dA_{ijk}/dy^l, vertical derivative
};

struct GeometrySample {
  SupportElement se;
  MetricSample metric;
  CartanSample cartan;
  ConnectionSample conn;
  ChernCurvatureSample chern;
  CartanCurvatureSample hat;
};

namespace detail {

// Everything downstream of one jet of F^2. The jet order decides how deep
// the chain can go: 2 -> metric + spray values, 3 -> connection values,
// 4 -> curvature values.
class Pipeline {
 public:
  Pipeline(const Metric& metric, const SupportElement& se, int order)
      : se_(se), order_(order), f2_(metric.f2_jet(se, order)) {
    if (f2_.value() <= 0.0) throw DomainError("F^2 not positive at support element");
    F_ = sqrt(f2_);
    for (int i = 0; i < 3; ++i) yj_[i] = Jet::variable(3 + i, se.y[i], order);
    build_metric();
  }

  MetricSample metric_sample() const { return ms_; }

  ConnectionSample connection_sample() {
    require(3);
    build_connection();
    ConnectionSample cs;
    for (int i = 0; i < 3; ++i) {
      cs.G[i] = Gj_[i].value();
      for (int j = 0; j < 3; ++j) {
        cs.N[i][j] = Nj_[i][j].value();
        for (int k = 0; k < 3; ++k) cs.Gamma[i][j][k] = Gammaj_[i][j][k].value();
      }
    }
    return cs;
  }

  CartanSample cartan_sample() {
    require(3);
    build_cartan();
    CartanSample out;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          out.C[i][j][k] = Cj_[i][j][k].value();
          out.A[i][j][k] = Aj_[i][j][k].value();
        }
    return out;
  }

  Vec3 spray_values() const {
    Mat3 d2{};  // (F^2)_{y^k x^l}
    Vec3 d1{};
    for (int k = 0; k < 3; ++k) {
      Jet fy = f2_.derivative(3 + k);
      d1[k] = f2_.derivative(k).value();
      for (int l = 0; l < 3; ++l) d2[k][l] = fy.derivative(l).value();
    }
    Vec3 G{};
    for (int i = 0; i < 3; ++i) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) {
        double rhs = -d1[k];
        for (int l = 0; l < 3; ++l) rhs += d2[k][l] * se_.y[l];
        acc += ms_.g_inv[i][k] * rhs;
      }
      G[i] = 0.5 * acc;
    }
    return G;
  }

  ChernCurvatureSample chern_sample() {
    require(4);
    build_connection();
    ChernCurvatureSample out;
    // delta Gamma^i_{jk} / delta x^c, and dGamma/dy
    double dgx[3][3][3][3], dgy[3][3][3][3];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int c = 0; c < 3; ++c) {
            dgx[i][j][k][c] = Gammaj_[i][j][k].derivative(c).value();
            dgy[i][j][k][c] = Gammaj_[i][j][k].derivative(3 + c).value();
          }
    double dGamma[3][3][3][3];  // horizontal derivative, last slot
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int c = 0; c < 3; ++c) {
            double v = dgx[i][j][k][c];
            for (int m = 0; m < 3; ++m) v -= Nj_[m][c].value() * dgy[i][j][k][m];
            dGamma[i][j][k][c] = v;
          }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l) {
            double r = dGamma[i][j][l][k] - dGamma[i][j][k][l];
            for (int m = 0; m < 3; ++m)
              r += Gammaj_[i][m][k].value() * Gammaj_[m][j][l].value() -
                   Gammaj_[i][m][l].value() * Gammaj_[m][j][k].value();
            out.R[i][j][k][l] = r;
            out.P[i][j][k][l] = -ms_.F * dgy[i][j][k][l];
          }
    return out;
  }

  CartanCurvatureSample cartan_hat_sample(const CartanSample& ca, const ConnectionSample& cs,
                                          const ChernCurvatureSample& ch) {
    require(4);
    build_connection();
    build_cartan();
    CartanCurvatureSample out;
    // A_{ijk|l} = delta A_{ijk}/delta x^l - Gamma^m_{il} A_{mjk}
    //            - Gamma^m_{jl} A_{imk} - Gamma^m_{kl} A_{ijm}
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          for (int l = 0; l < 3; ++l) {
            double v = Aj_[i][j][k].derivative(l).value();
            for (int m = 0; m < 3; ++m) {
              v -= Nj_[m][l].value() * Aj_[i][j][k].derivative(3 + m).value();
              v -= cs.Gamma[m][i][l] * ca.A[m][j][k];
              v -= cs.Gamma[m][j][l] * ca.A[i][m][k];
              v -= cs.Gamma[m][k][l] * ca.A[i][j][m];
            }
            out.A_cov[i][j][k][l] = v;
            out.A_vert[i][j][k][l] = ms_.F * Aj_[i][j][k].derivative(3 + l).value();
          }
          double dot = 0.0;
          for (int l = 0; l < 3; ++l) dot += out.A_cov[i][j][k][l] * ms_.u[l];
          out.A_dot[i][j][k] = dot;
        }
    double Aup[3][3][3], Adot_up[3][3][3], Acov_up[3][3][3][3];
    raise_first(ca.A, Aup);
    raise_first(out.A_dot, Adot_up);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l) {
            double v = 0.0;
            for (int m = 0; m < 3; ++m) v += ms_.g_inv[i][m] * out.A_cov[m][j][k][l];
            Acov_up[i][j][k][l] = v;
          }
    double Ru[3][3][3];  // u^n R^m_{n k l}
    for (int m = 0; m < 3; ++m)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          double v = 0.0;
          for (int n = 0; n < 3; ++n) v += ch.R[m][n][k][l] * ms_.u[n];
          Ru[m][k][l] = v;
        }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l) {
            double rh = ch.R[i][j][k][l];
            double ph = ch.P[i][j][k][l] + Acov_up[i][j][l][k];
            double qh = 0.0;
            for (int m = 0; m < 3; ++m) {
              rh += Aup[i][j][m] * Ru[m][k][l];
              ph -= Aup[i][j][m] * Adot_up[m][k][l];
              qh += Aup[i][l][m] * Aup[m][j][k] - Aup[i][k][m] * Aup[m][j][l];
            }
            out.Rhat[i][j][k][l] = rh;
            out.Phat[i][j][k][l] = ph;
            out.Qhat[i][j][k][l] = qh;
          }
    return out;
  }

 private:
  void require(int order) const {
    if (order_ < order) throw IndexError("jet order too low for requested tensors");
  }

  void build_metric() {
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        gj_[i][j] = 0.5 * (f2_.derivative(3 + i).derivative(3 + j));
        if (j != i) gj_[j][i] = gj_[i][j];
      }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) ms_.g[i][j] = gj_[i][j].value();
    double tr = ms_.g[0][0] + ms_.g[1][1] + ms_.g[2][2];
    double min_eig = min_eigenvalue_sym3(ms_.g);
    if (!(min_eig > 1e-10 * tr))
      throw NonPositiveDefinite("fundamental tensor not positive-definite at support element",
                                min_eig);
    ginvj_ = inverse3(gj_);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) ms_.g_inv[i][j] = ginvj_[i][j].value();
    ms_.F = F_.value();
    for (int i = 0; i < 3; ++i) ms_.u[i] = se_.y[i] / ms_.F;
    ms_.u_flat = matvec(ms_.g, ms_.u);
    ms_.sqrt_det_g = std::sqrt(det3(ms_.g));
  }

  void build_connection() {
    if (have_connection_) return;
    have_connection_ = true;
    // spray as a jet: G^i = g^{ik} ((F^2)_{y^k x^l} y^l - (F^2)_{x^k}) / 2
    for (int i = 0; i < 3; ++i) {
      Jet acc = Jet::constant(0.0, order_);
      for (int k = 0; k < 3; ++k) {
        Jet fy = f2_.derivative(3 + k);
        Jet rhs = -f2_.derivative(k);
        for (int l = 0; l < 3; ++l) rhs += fy.derivative(l) * yj_[l];
        acc += ginvj_[i][k] * rhs;
      }
      Gj_[i] = 0.5 * acc;
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) Nj_[i][j] = 0.5 * Gj_[i].derivative(3 + j);
    // delta g_{ab} / delta x^c = dg/dx^c - N^m_c dg/dy^m
    Jet dg[3][3][3];
    for (int a = 0; a < 3; ++a)
      for (int b = a; b < 3; ++b)
        for (int c = 0; c < 3; ++c) {
          Jet v = gj_[a][b].derivative(c);
          for (int m = 0; m < 3; ++m) v -= Nj_[m][c] * gj_[a][b].derivative(3 + m);
          dg[a][b][c] = v;
          if (a != b) dg[b][a][c] = v;
        }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = j; k < 3; ++k) {
          Jet acc = Jet::constant(0.0, order_);
          for (int l = 0; l < 3; ++l)
            acc += ginvj_[i][l] * (dg[k][l][j] + dg[j][l][k] - dg[j][k][l]);
          Gammaj_[i][j][k] = 0.5 * acc;
          if (k != j) Gammaj_[i][k][j] = Gammaj_[i][j][k];
        }
  }

  void build_cartan() {
    if (have_cartan_) return;
    have_cartan_ = true;
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        Jet gij = f2_.derivative(3 + i).derivative(3 + j);
        for (int k = j; k < 3; ++k) {
          Jet c = 0.25 * gij.derivative(3 + k);
          Jet a = F_ * c;
          // totally symmetric: fill all permutations
          int idx[3] = {i, j, k};
          int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
          for (auto& p : perms) {
            Cj_[idx[p[0]]][idx[p[1]]][idx[p[2]]] = c;
            Aj_[idx[p[0]]][idx[p[1]]][idx[p[2]]] = a;
          }
        }
      }
  }

  void raise_first(const double t[3][3][3], double out[3][3][3]) const {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          double v = 0.0;
          for (int m = 0; m < 3; ++m) v += ms_.g_inv[i][m] * t[m][j][k];
          out[i][j][k] = v;
        }
  }

  SupportElement se_;
  int order_;
  Jet f2_, F_;
  Vec3T<Jet> yj_;
  Mat3T<Jet> gj_, ginvj_;
  MetricSample ms_;
  Vec3T<Jet> Gj_;
  Mat3T<Jet> Nj_;
  Jet Gammaj_[3][3][3];
  Jet Cj_[3][3][3], Aj_[3][3][3];
  bool have_connection_ = false;
  bool have_cartan_ = false;
};

}  // namespace detail

inline MetricSample fundamental_tensor(const Metric& metric, const SupportElement& se) {
  return detail::Pipeline(metric, se, 2).metric_sample();
}

inline CartanSample cartan_tensor(const Metric& metric, const SupportElement& se) {
  return detail::Pipeline(metric, se, 3).cartan_sample();
}

inline ConnectionSample connection(const Metric& metric, const SupportElement& se) {
  return detail::Pipeline(metric, se, 3).connection_sample();
}

inline ChernCurvatureSample chern_curvature(const Metric& metric, const SupportElement& se) {
  return detail::Pipeline(metric, se, 4).chern_sample();
}

inline GeometrySample geometry_sample(const Metric& metric, const SupportElement& se) {
  detail::Pipeline p(metric, se, 4);
  GeometrySample gs;
  gs.se = se;
  gs.metric = p.metric_sample();
  gs.cartan = p.cartan_sample();
  gs.conn = p.connection_sample();
  gs.chern = p.chern_sample();
  gs.hat = p.cartan_hat_sample(gs.cartan, gs.conn, gs.chern);
  return gs;
}

inline CartanCurvatureSample cartan_curvature(const Metric& metric, const SupportElement& se) {
  return geometry_sample(metric, se).hat;
}

// fast path for ray tracing: F, g, g_inv and the spray at (x, y)
struct SprayEval {
  MetricSample metric;
  Vec3 G;
};

inline SprayEval spray_eval(const Metric& metric, const Vec3& x, const Vec3& y) {
  detail::Pipeline p(metric, SupportElement{x, y}, 2);
  return {p.metric_sample(), p.spray_values()};
}

}  // namespace finsleray
