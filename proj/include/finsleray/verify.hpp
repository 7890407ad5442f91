#pragma once

#include <string>
#include <vector>

#include "finsleray/dynamics.hpp"

namespace finsleray {

struct IdentityResult {
  std::string key;
  bool pass = true;
  bool skipped = false;
  double max_residual = 0.0;
  double tolerance = 0.0;
  SupportElement worst{};
  std::string note;
};

struct VerifyReport {
  std::string medium;
  long samples = 0;
  std::uint64_t seed = 0;
  std::vector<IdentityResult> identities;

  bool all_pass() const {
    for (const auto& r : identities)
      if (!r.pass) return false;
    return true;
  }
};

struct VerifyOptions {
  int samples = 100;
  std::uint64_t seed = 1;
  SpinConstants constants{1.0, 0.01};
  double perturbation = 1e-3;  // kernel detection probe
  SampleBox box{};
  int kernel_samples = -1;  // default: min(samples, 50)
};

namespace detail {

inline void track(IdentityResult& r, double residual, const SupportElement& se) {
  if (residual > r.max_residual) {
    r.max_residual = residual;
    r.worst = se;
  }
}

// delta F / delta x^i = dF/dx^i - N^j_i dF/dy^j, from a fresh order-1-in-each jet
inline double horizontal_f_residual(const Metric& metric, const GeometrySample& gs) {
  Jet f2 = metric.f2_jet(gs.se, 2);
  Jet F = sqrt(f2);
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    double v = F.derivative(i).value();
    for (int j = 0; j < 3; ++j) v -= gs.conn.N[j][i] * F.derivative(3 + j).value();
    worst = std::max(worst, std::abs(v));
  }
  return worst;
}

// horizontal covariant derivative of the unit support vector:
// delta u^i/delta x^j + Gamma^i_{kj} u^k
inline double unit_transport_residual(const Metric& metric, const GeometrySample& gs) {
  Jet f2 = metric.f2_jet(gs.se, 2);
  Jet F = sqrt(f2);
  Vec3T<Jet> uj;
  for (int i = 0; i < 3; ++i) uj[i] = Jet::variable(3 + i, gs.se.y[i], 2) / F;
  double worst = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double v = uj[i].derivative(j).value();
      for (int m = 0; m < 3; ++m) v -= gs.conn.N[m][j] * uj[i].derivative(3 + m).value();
      for (int k = 0; k < 3; ++k) v += gs.conn.Gamma[i][k][j] * gs.metric.u[k];
      worst = std::max(worst, std::abs(v));
    }
  return worst;
}

}  // namespace detail

// Runs the structural-identity battery on seeded random admissible support
// elements of the medium. Residual keys follow the tensor identities they
// check; thresholds are fixed here.
inline VerifyReport run_verify(const MediumSpec& spec, const VerifyOptions& opt = {},
                               const std::string& name = "") {
  Metric metric(spec);
  VerifyReport report;
  report.medium = name;
  report.samples = opt.samples;
  report.seed = opt.seed;

  IdentityResult homogeneity{.key = "Homogeneity", .tolerance = 1e-12};
  IdentityResult euler{.key = "Euler-gyy=F2", .tolerance = 1e-10};
  IdentityResult gamma_sym{.key = "GammaSym", .tolerance = 1e-9};
  IdentityResult nij{.key = "NijChern", .tolerance = 1e-9};
  IdentityResult dfdx{.key = "deltaFdeltax=0", .tolerance = 1e-9};
  IdentityResult transport{.key = "UnitTransport", .tolerance = 1e-9};
  IdentityResult al0{.key = "Al=0", .tolerance = 1e-8};
  IdentityResult pl0{.key = "Pl=0", .tolerance = 1e-8};
  IdentityResult bianchi{.key = "Bianchi-P=-Adot", .tolerance = 1e-8};
  IdentityResult lemma4{.key = "Lemma4-PSu=0", .tolerance = 1e-8};
  IdentityResult kernel{.key = "KernelResidual", .tolerance = 1e-7};
  IdentityResult riem_red{.key = "RiemannianReduction", .tolerance = 1e-8};
  IdentityResult sigma_cons{.key = "SigmaConsistency", .tolerance = 1e-10};
  IdentityResult convexity{.key = "StrongConvexity", .tolerance = 0.0};

  // positive-definiteness scan over raw admissible directions (no filtering
  // by the eigenvalue test itself, so genuine failures surface here)
  {
    ConvexityReport cr = check_strong_convexity(spec, opt.samples, opt.seed ^ 0x9e3779b9ull, opt.box);
    if (!cr.all_positive_definite()) {
      convexity.pass = false;
      convexity.max_residual = static_cast<double>(cr.failures.size());
      convexity.worst = SupportElement{cr.failures.front().x, cr.failures.front().y};
      convexity.note = "NonPositiveDefinite at " + std::to_string(cr.failures.size()) + " of " +
                       std::to_string(cr.tested) + " samples";
    } else {
      convexity.note = "minimum eigenvalue positive at all " + std::to_string(cr.tested) + " samples";
    }
  }

  SplitMix64 rng(opt.seed);
  int kernel_budget = opt.kernel_samples >= 0 ? opt.kernel_samples : std::min(opt.samples, 50);
  double kernel_detect_min = std::numeric_limits<double>::infinity();

  for (int n = 0; n < opt.samples; ++n) {
    SupportElement se = sample_admissible(spec, rng, opt.box);
    double f = metric.f(se.x, se.y);
    for (auto& v : se.y) v /= f;  // indicatrix point

    // homogeneity on the raw (pre-normalization) scale
    for (double lam : {0.5, 2.0, 7.0}) {
      Vec3 ys = lam * se.y;
      double lhs = metric.f(se.x, ys);
      detail::track(homogeneity, std::abs(lhs - lam) / lam, se);
    }

    GeometrySample gs = geometry_sample(metric, se);
    double F2 = gs.metric.F * gs.metric.F;
    detail::track(euler, std::abs(quadratic_form(gs.metric.g, se.y) - F2) / F2, se);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          detail::track(gamma_sym, std::abs(gs.conn.Gamma[i][j][k] - gs.conn.Gamma[i][k][j]), se);
    for (int i = 0; i < 3; ++i) {
      double gres = -gs.conn.G[i];
      for (int j = 0; j < 3; ++j) {
        double v = -gs.conn.N[i][j];
        for (int k = 0; k < 3; ++k) v += gs.conn.Gamma[i][j][k] * se.y[k];
        detail::track(nij, std::abs(v), se);
        gres += gs.conn.N[i][j] * se.y[j];
      }
      detail::track(nij, std::abs(gres), se);
    }
    detail::track(dfdx, detail::horizontal_f_residual(metric, gs), se);
    detail::track(transport, detail::unit_transport_residual(metric, gs), se);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double v = 0.0;
        for (int k = 0; k < 3; ++k) v += gs.cartan.A[i][j][k] * gs.metric.u[k];
        detail::track(al0, std::abs(v), se);
      }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          double v = 0.0;
          for (int l = 0; l < 3; ++l) v += gs.chern.P[i][j][k][l] * gs.metric.u[l];
          detail::track(pl0, std::abs(v), se);
          // u^l P_{l i j k} + Adot_{ijk} with the contravariant slot lowered
          double w = gs.hat.A_dot[i][j][k];
          for (int m = 0; m < 3; ++m)
            for (int l = 0; l < 3; ++l)
              w += gs.metric.g[i][m] * gs.chern.P[m][l][j][k] * gs.metric.u[l];
          detail::track(bianchi, std::abs(w), se);
        }

    SpinTensorSample spin = spin_tensor(gs.metric, opt.constants.spin);
    CouplingSample cpl = couplings(gs, spin, opt.constants);
    for (int i = 0; i < 3; ++i) {
      double a = 0.0, b = 0.0;
      for (int j = 0; j < 3; ++j) {
        a += cpl.PS[i][j] * gs.metric.u[j];
        b += gs.metric.u[j] * cpl.PS[j][i];
      }
      detail::track(lemma4, std::max(std::abs(a), std::abs(b)), se);
    }

    FrameScalars fs = frame_scalars(gs, opt.constants);
    double sigma_scale = std::max(1.0, std::abs(cpl.Sigma));
    detail::track(sigma_cons, std::abs(fs.Sigma - cpl.Sigma) / sigma_scale, se);
    detail::track(sigma_cons,
                  std::abs(fs.Delta - cpl.Delta) / std::max(1e-12, std::abs(cpl.Delta)), se);

    if (n < kernel_budget) {
      try {
        FoliationResult fr = foliation_generator(gs, spin, opt.constants);
        KernelResidual kr = kernel_residual(gs, spin, opt.constants, fr.deriv);
        detail::track(kernel, kr.max_residual, se);
        detail::track(kernel, kr.tangency, se);
        RayDerivative bad = perturb_off_kernel(fr.deriv, opt.perturbation, rng);
        KernelResidual kp = kernel_residual(gs, spin, opt.constants, bad);
        kernel_detect_min = std::min(kernel_detect_min, kp.max_residual);

        if (metric.riemannian_class()) {
          RiemannianGeometry rg = riemannian_geometry(spec, se.x);
          RiemannianSpinRay rr = riemannian_spin_ray(rg, gs.metric.u, opt.constants);
          for (int i = 0; i < 3; ++i) {
            detail::track(riem_red, std::abs(fr.deriv.dx[i] - rr.deriv.dx[i]), se);
            detail::track(riem_red, std::abs(fr.deriv.du[i] - rr.deriv.du[i]), se);
          }
          double rel = std::abs(cpl.Sigma * opt.constants.spin - cpl.SigmaPrime) /
                       std::max(1e-30, std::abs(cpl.SigmaPrime));
          if (rel > 1e-10) {
            riem_red.pass = false;
            riem_red.note = "Sigma*s != Sigma' at relative 1e-10";
          }
        }
      } catch (const SingularLocus&) {
        // excluded locus sampled; skip this point for the kernel check
      }
    }
  }

  if (!metric.riemannian_class()) {
    riem_red.skipped = true;
    riem_red.note = "medium is not Riemannian";
  }
  if (kernel_detect_min < 1e-4) {
    kernel.pass = false;
    kernel.note = "perturbed generator not detected (residual " +
                  format_shortest(kernel_detect_min) + " < 1e-4)";
  } else if (std::isfinite(kernel_detect_min)) {
    kernel.note = "perturbation residual floor " + format_shortest(kernel_detect_min);
  }

  for (IdentityResult* r : {&convexity, &homogeneity, &euler, &gamma_sym, &nij, &dfdx, &transport,
                            &al0, &pl0, &bianchi, &lemma4, &kernel, &riem_red, &sigma_cons}) {
    if (!r->skipped && r->max_residual > r->tolerance) r->pass = false;
    report.identities.push_back(*r);
  }
  return report;
}

}  // namespace finsleray
