#pragma once

#include "finsleray/frames.hpp"

namespace finsleray {

// Orbit invariants of a classical polarized ray: color p > 0 and spin
// s != 0; helicity is the sign of s. Photon presets in code units take
// |s| = 1 and p = 1 / |reduced wavelength|.
struct SpinConstants {
  double color = 1.0;
  double spin = 0.01;

  int helicity() const { return spin > 0 ? 1 : -1; }
  void validate() const {
    if (!(color > 0.0)) throw ConfigError("color must be positive");
    if (spin == 0.0 || !std::isfinite(spin)) throw ConfigError("spin must be nonzero");
  }
};

struct SingularTolerances {
  double scale = 1e-9;
  double delta_tol(const SpinConstants& k) const { return floor_for(k); }
  double sigma_tol(const SpinConstants& k) const { return floor_for(k); }

 private:
  double floor_for(const SpinConstants& k) const {
    double s = std::abs(k.spin);
    return scale * std::max(s, k.color * k.color / s);
  }
};

struct SpinTensorSample {
  double s = 0.0;
  double sqrt_det_g = 0.0;
  double vol[3][3][3]{};  // sqrt(det g) eps_ijk
  Mat3 S_lo{};            // S_ij = s vol_ijk u^k
  Mat3 S_up{};            // g^{ik} g^{jl} S_kl
  Mat3 S_mix{};           // S^i_j = g^{ik} S_kj
};

inline SpinTensorSample spin_tensor(const Mat3& g, const Mat3& g_inv, const Vec3& u, double s) {
  SpinTensorSample out;
  out.s = s;
  out.sqrt_det_g = std::sqrt(det3(g));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 3; ++k) out.vol[i][j][k] = out.sqrt_det_g * levi_civita(i, j, k);
      double v = 0.0;
      for (int k = 0; k < 3; ++k) v += out.vol[i][j][k] * u[k];
      out.S_lo[i][j] = s * v;
    }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double up = 0.0, mix = 0.0;
      for (int k = 0; k < 3; ++k) {
        mix += g_inv[i][k] * out.S_lo[k][j];
        for (int l = 0; l < 3; ++l) up += g_inv[i][k] * g_inv[j][l] * out.S_lo[k][l];
      }
      out.S_up[i][j] = up;
      out.S_mix[i][j] = mix;
    }
  return out;
}

inline SpinTensorSample spin_tensor(const MetricSample& m, double s) {
  return spin_tensor(m.g, m.g_inv, m.u, s);
}

// Spin-curvature contractions. The curvature tensors are stored with the
// contravariant index first; the couplings below contract the spin tensor
// against the (lowered-row, column) pair in that order, i.e.
// T(S)_kl = g_{jm} T^m_{ikl} S^{ij}, matching the frame computation where
// the pairing of the connection with the spin moment fixes the slot order.
struct CouplingSample {
  Mat3 RS{}, PS{}, QhatS{};
  double RSS = 0.0, QhatSS = 0.0;
  double Delta = 0.0, Sigma = 0.0;
  double SigmaPrime = 0.0;  // p^2 + R(S)(S)/4, the Riemannian-case scalar
};

namespace detail {

inline void couple(const double T[3][3][3][3], const Mat3& g, const Mat3& S_up, Mat3& out) {
  // out_kl = sum_{ijm} g[j][m] T[m][i][k][l] S_up[i][j]
  double Tlo[3][3][3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          double v = 0.0;
          for (int m = 0; m < 3; ++m) v += g[j][m] * T[m][i][k][l];
          Tlo[i][j][k][l] = v;
        }
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) {
      double v = 0.0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) v += Tlo[i][j][k][l] * S_up[i][j];
      out[k][l] = v;
    }
}

inline double contract2(const Mat3& a, const Mat3& b) {
  double v = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) v += a[i][j] * b[i][j];
  return v;
}

}  // namespace detail

inline CouplingSample couplings(const GeometrySample& geom, const SpinTensorSample& spin,
                                const SpinConstants& k) {
  k.validate();
  const double s = k.spin, p = k.color;
  CouplingSample out;
  detail::couple(geom.chern.R, geom.metric.g, spin.S_up, out.RS);
  detail::couple(geom.chern.P, geom.metric.g, spin.S_up, out.PS);
  detail::couple(geom.hat.Qhat, geom.metric.g, spin.S_up, out.QhatS);
  out.RSS = detail::contract2(out.RS, spin.S_up);
  out.QhatSS = detail::contract2(out.QhatS, spin.S_up);
  out.Delta = s * (1.0 - out.QhatSS / (4.0 * s * s));
  double trPS = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) trPS += out.PS[i][j] * geom.metric.g_inv[i][j];
  double quad = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          quad += out.PS[i][a] * out.PS[j][b] * spin.S_up[i][j] * spin.S_up[a][b];
  out.Sigma = (p * p - 0.5 * p * trPS + quad / (8.0 * s * s)) / out.Delta + out.RSS / (4.0 * s);
  out.SigmaPrime = p * p + 0.25 * out.RSS;
  return out;
}

struct RayDerivative {
  Vec3 dx{}, du{};
};

// Generator of the spin-ray foliation, normalized so the component along
// the support direction is 1 (flat limit reproduces unit-speed geodesics).
// The vertical coefficient V lives in the horizontal/vertical splitting;
// du converts it to the coordinate ODE via du^i = V^i - N^i_j dx^j.
struct FoliationResult {
  RayDerivative deriv;
  Vec3 V{};  // vertical part before the nonlinear-connection conversion
  CouplingSample coupling;
};

inline FoliationResult foliation_generator(const GeometrySample& geom,
                                           const SpinTensorSample& spin, const SpinConstants& k,
                                           const SingularTolerances& tol = {}) {
  const double s = k.spin, p = k.color;
  CouplingSample c = couplings(geom, spin, k);
  if (std::abs(c.Delta) < tol.delta_tol(k) || std::abs(c.Sigma) < tol.sigma_tol(k))
    throw SingularLocus("foliation singular: Delta or Sigma at tolerance", c.Delta, c.Sigma);

  const Mat3& gi = geom.metric.g_inv;
  const Vec3& u = geom.metric.u;
  // W^j = g^{jm} R(S)_{mk} u^k
  Vec3 W{};
  for (int j = 0; j < 3; ++j)
    for (int m = 0; m < 3; ++m)
      for (int kk = 0; kk < 3; ++kk) W[j] += gi[j][m] * c.RS[m][kk] * u[kk];

  FoliationResult out;
  out.coupling = c;
  Vec3 SW = matvec(spin.S_mix, W);
  for (int i = 0; i < 3; ++i) out.deriv.dx[i] = u[i] + SW[i] / (2.0 * s * c.Sigma);

  // Kt^j_k = p delta - (1/2) g^{jm} P(S)_{km}
  Mat3 Kt{};
  for (int j = 0; j < 3; ++j)
    for (int kk = 0; kk < 3; ++kk) {
      double v = (j == kk) ? p : 0.0;
      for (int m = 0; m < 3; ++m) v -= 0.5 * gi[j][m] * c.PS[kk][m];
      Kt[j][kk] = v;
    }
  Vec3 V = matvec(spin.S_mix, matvec(Kt, SW));
  for (int i = 0; i < 3; ++i) out.V[i] = -V[i] / (2.0 * s * s * c.Delta * c.Sigma);
  for (int i = 0; i < 3; ++i) {
    double v = out.V[i];
    for (int j = 0; j < 3; ++j) v -= geom.conn.N[i][j] * out.deriv.dx[j];
    out.deriv.du[i] = v;
  }
  return out;
}

// ---------------------------------------------------------------------------
// presymplectic-form oracle

struct KernelResidual {
  double max_residual = 0.0;  // |sigma(X, e_b)| over the 5 tangent basis vectors
  double lambda = 0.0;        // constraint multiplier; identically 0 here
  double tangency = 0.0;      // |omega^3bar(X)|, deviation from T(SM)
  double residuals[6]{};
};

// Builds the restricted 2-form in an adapted hv-coframe and contracts it
// with X. For the foliation generator the residual vanishes; a generic
// perturbation of comparable size does not.
inline KernelResidual kernel_residual(const GeometrySample& geom, const SpinTensorSample& spin,
                                      const SpinConstants& k, const RayDerivative& X,
                                      int seed_axis = 0) {
  const double s = k.spin, p = k.color;
  CouplingSample c = couplings(geom, spin, k);
  OrthonormalFrame fr = adapted_frame(geom.metric.g, geom.metric.u, seed_axis);

  // frame components of the couplings
  double RSf[3][3], PSf[3][3], QSf[3][3];
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      double rs = 0.0, ps = 0.0, qs = 0.0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          double w = fr.e[a][i] * fr.e[b][j];
          rs += c.RS[i][j] * w;
          ps += c.PS[i][j] * w;
          qs += c.QhatS[i][j] * w;
        }
      RSf[a][b] = rs;
      PSf[a][b] = ps;
      QSf[a][b] = qs;
    }

  // sigma(e_row, e_col) over the hv-basis (e_1, e_2, e_3, e_1bar, e_2bar, e_3bar)
  double M[6][6]{};
  auto eps2 = [](int A, int B) { return A == 0 && B == 1 ? 1.0 : (A == 1 && B == 0 ? -1.0 : 0.0); };
  for (int A = 0; A < 2; ++A)
    for (int B = 0; B < 2; ++B) {
      double pd = (A == B) ? p : 0.0;
      M[3 + A][B] += pd;
      M[B][3 + A] -= pd;
      M[3 + A][3 + B] += -s * eps2(A, B) + 0.5 * QSf[A][B];
      M[A][B] += 0.5 * RSf[A][B];
      M[A][3 + B] += 0.5 * PSf[A][B];
      M[3 + B][A] -= 0.5 * PSf[A][B];
    }
  for (int A = 0; A < 2; ++A) {
    M[A][2] += 0.5 * RSf[A][2];
    M[2][A] -= 0.5 * RSf[A][2];
  }

  // hv-frame components of X: horizontal H = dx, vertical V = du + N dx
  Vec3 H = X.dx, V{};
  for (int i = 0; i < 3; ++i) {
    V[i] = X.du[i];
    for (int j = 0; j < 3; ++j) V[i] += geom.conn.N[i][j] * X.dx[j];
  }
  double Xhat[6];
  for (int a = 0; a < 3; ++a) {
    double h = 0.0, v = 0.0;
    for (int i = 0; i < 3; ++i) {
      h += fr.omega[a][i] * H[i];
      v += fr.omega[a][i] * V[i];
    }
    Xhat[a] = h;
    Xhat[3 + a] = v;
  }

  KernelResidual out;
  out.tangency = std::abs(Xhat[5]);
  for (int b = 0; b < 6; ++b) {
    double r = 0.0;
    for (int a = 0; a < 6; ++a) r += Xhat[a] * M[a][b];  // sigma(X, e_b)
    out.residuals[b] = r;
    if (b < 5) out.max_residual = std::max(out.max_residual, std::abs(r));
  }
  out.lambda = -out.residuals[5];
  return out;
}

// a random tangent perturbation of the given magnitude, orthogonalized
// against the generator so it cannot fall along the kernel direction
inline RayDerivative perturb_off_kernel(const RayDerivative& X, double magnitude,
                                        SplitMix64& rng) {
  double xv[6] = {X.dx[0], X.dx[1], X.dx[2], X.du[0], X.du[1], X.du[2]};
  double d[6];
  for (;;) {
    double n2 = 0.0, dot_x = 0.0, x2 = 0.0;
    for (int i = 0; i < 6; ++i) {
      d[i] = rng.normal();
      dot_x += d[i] * xv[i];
      x2 += xv[i] * xv[i];
    }
    for (int i = 0; i < 6; ++i) {
      d[i] -= dot_x / x2 * xv[i];
      n2 += d[i] * d[i];
    }
    if (n2 > 1e-6) {
      double sc = magnitude / std::sqrt(n2);
      RayDerivative out = X;
      for (int i = 0; i < 3; ++i) {
        out.dx[i] += sc * d[i];
        out.du[i] += sc * d[3 + i];
      }
      return out;
    }
  }
}

// ---------------------------------------------------------------------------
// independent Riemannian route

// Classical Riemannian data computed from the position-dependent metric
// expressions alone (x-jets of g_ij; no Finsler machinery). Only valid for
// media whose fundamental tensor does not depend on y.
struct RiemannianGeometry {
  Mat3 g{}, g_inv{};
  double gamma[3][3][3]{};    // Christoffel symbols of second kind
  double riemann[3][3][3][3]{};  // R^i_{jkl}
};

inline RiemannianGeometry riemannian_geometry(const MediumSpec& spec, const Vec3& x) {
  if (!spec.riemannian_class())
    throw ConfigError("riemannian_geometry requires a euclidean/conformal/riemannian medium");

  Vec3T<Jet> xj;
  for (int i = 0; i < 3; ++i) xj[i] = Jet::variable(i, x[i], 2);
  Mat3T<Jet> gj;
  if (std::holds_alternative<EuclideanSpec>(spec.value)) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) gj[i][j] = Jet::constant(i == j ? 1.0 : 0.0, 2);
  } else if (const auto* cf = std::get_if<ConformalSpec>(&spec.value)) {
    Jet n = eval_expr(*cf->index, xj);
    Jet n2 = n * n;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) gj[i][j] = (i == j) ? n2 : Jet::constant(0.0, 2);
  } else {
    gj = detail::eval_sym_form(std::get<RiemannianSpec>(spec.value).g, xj);
  }
  Mat3T<Jet> ginvj = inverse3(gj);

  RiemannianGeometry out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      out.g[i][j] = gj[i][j].value();
      out.g_inv[i][j] = ginvj[i][j].value();
    }
  Jet gammaj[3][3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int kk = j; kk < 3; ++kk) {
        Jet acc = Jet::constant(0.0, 2);
        for (int l = 0; l < 3; ++l)
          acc += ginvj[i][l] *
                 (gj[kk][l].derivative(j) + gj[j][l].derivative(kk) - gj[j][kk].derivative(l));
        gammaj[i][j][kk] = 0.5 * acc;
        if (kk != j) gammaj[i][kk][j] = gammaj[i][j][kk];
        out.gamma[i][j][kk] = out.gamma[i][kk][j] = gammaj[i][j][kk].value();
      }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int kk = 0; kk < 3; ++kk)
        for (int l = 0; l < 3; ++l) {
          double r = gammaj[i][j][l].derivative(kk).value() - gammaj[i][j][kk].derivative(l).value();
          for (int m = 0; m < 3; ++m)
            r += out.gamma[i][m][kk] * out.gamma[m][j][l] - out.gamma[i][m][l] * out.gamma[m][j][kk];
          out.riemann[i][j][kk][l] = r;
        }
  return out;
}

// Riemannian special case of the foliation generator, coded directly from
// the classical curvature tensor. The vertical part carries the factor p
// required for consistency with the general formula (the two routes agree
// wherever the Cartan tensor vanishes).
struct RiemannianSpinRay {
  RayDerivative deriv;
  Vec3 V{};
  double SigmaPrime = 0.0;
  double RSS = 0.0;
};

inline RiemannianSpinRay riemannian_spin_ray(const RiemannianGeometry& rg, const Vec3& u,
                                             const SpinConstants& k,
                                             const SingularTolerances& tol = {}) {
  k.validate();
  const double s = k.spin, p = k.color;
  SpinTensorSample spin = spin_tensor(rg.g, rg.g_inv, u, s);
  Mat3 RS{};
  detail::couple(rg.riemann, rg.g, spin.S_up, RS);
  double RSS = detail::contract2(RS, spin.S_up);
  RiemannianSpinRay out;
  out.RSS = RSS;
  out.SigmaPrime = p * p + 0.25 * RSS;
  if (std::abs(out.SigmaPrime) < std::abs(s) * tol.sigma_tol(k))
    throw SingularLocus("Riemannian foliation singular", s, out.SigmaPrime / s);
  Vec3 W{};
  for (int j = 0; j < 3; ++j)
    for (int m = 0; m < 3; ++m)
      for (int kk = 0; kk < 3; ++kk) W[j] += rg.g_inv[j][m] * RS[m][kk] * u[kk];
  Vec3 SW = matvec(spin.S_mix, W);
  for (int i = 0; i < 3; ++i) {
    out.deriv.dx[i] = u[i] + SW[i] / (2.0 * out.SigmaPrime);
    out.V[i] = p * W[i] / (2.0 * out.SigmaPrime);
  }
  for (int i = 0; i < 3; ++i) {
    double v = out.V[i];
    for (int j = 0; j < 3; ++j)
      for (int kk = 0; kk < 3; ++kk) v -= rg.gamma[i][j][kk] * u[kk] * out.deriv.dx[j];
    out.deriv.du[i] = v;
  }
  return out;
}

// frame-index route for the foliation scalars, used as a consistency oracle
// against the coordinate-index expressions
struct FrameScalars {
  double Delta = 0.0, Sigma = 0.0;
};

// (takes no spin-tensor sample: the frame route rebuilds the moment s eps^{AB}
// internally, which is what makes it an independent check)
inline FrameScalars frame_scalars(const GeometrySample& geom, const SpinConstants& k,
                                  int seed_axis = 0) {
  const double s = k.spin, p = k.color;
  OrthonormalFrame fr = adapted_frame(geom.metric.g, geom.metric.u, seed_axis);
  // lowered tensors in the (column, row, k, l) slot order, then frame indices
  auto frame4 = [&](const double T[3][3][3][3], double out[3][3][3][3]) {
    double Tlo[3][3][3][3];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) {
            double v = 0.0;
            for (int m = 0; m < 3; ++m) v += geom.metric.g[j][m] * T[m][i][a][b];
            Tlo[i][j][a][b] = v;
          }
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int cc = 0; cc < 3; ++cc)
          for (int d = 0; d < 3; ++d) {
            double v = 0.0;
            for (int i = 0; i < 3; ++i)
              for (int j = 0; j < 3; ++j)
                for (int kk = 0; kk < 3; ++kk)
                  for (int l = 0; l < 3; ++l)
                    v += Tlo[i][j][kk][l] * fr.e[a][i] * fr.e[b][j] * fr.e[cc][kk] * fr.e[d][l];
            out[a][b][cc][d] = v;
          }
  };
  double Rf[3][3][3][3], Pf[3][3][3][3], Qf[3][3][3][3];
  frame4(geom.chern.R, Rf);
  frame4(geom.chern.P, Pf);
  frame4(geom.hat.Qhat, Qf);

  auto eps2 = [](int A, int B) { return A == 0 && B == 1 ? 1.0 : (A == 1 && B == 0 ? -1.0 : 0.0); };
  double qee = 0.0, ree = 0.0;
  for (int A = 0; A < 2; ++A)
    for (int B = 0; B < 2; ++B)
      for (int C = 0; C < 2; ++C)
        for (int D = 0; D < 2; ++D) {
          qee += Qf[A][B][C][D] * eps2(A, B) * eps2(C, D);
          ree += Rf[A][B][C][D] * eps2(A, B) * eps2(C, D);
        }
  FrameScalars out;
  out.Delta = s * (1.0 - 0.25 * qee);
  // P(S) in frame indices from the full contraction (s eps^{AB} moment)
  double PSf[2][2];
  for (int C = 0; C < 2; ++C)
    for (int D = 0; D < 2; ++D) {
      double v = 0.0;
      for (int A = 0; A < 2; ++A)
        for (int B = 0; B < 2; ++B) v += Pf[A][B][C][D] * s * eps2(A, B);
      PSf[C][D] = v;
    }
  double tr = PSf[0][0] + PSf[1][1];
  double det = PSf[0][0] * PSf[1][1] - PSf[0][1] * PSf[1][0];
  out.Sigma = (p * p - 0.5 * p * tr + 0.25 * det) / out.Delta + 0.25 * s * ree;
  return out;
}

}  // namespace finsleray
