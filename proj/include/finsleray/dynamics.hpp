#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "finsleray/spin.hpp"

namespace finsleray {

struct RayState {
  Vec3 x{}, u{};
  double t = 0.0;
};

struct RhsEval {
  RayDerivative d;
  double delta = std::numeric_limits<double>::quiet_NaN();
  double sigma = std::numeric_limits<double>::quiet_NaN();
};

using RayRhs = std::function<RhsEval(const Vec3& x, const Vec3& u)>;

// Finsler geodesics: dx = u, du = -G(x, u)
inline RayRhs make_geodesic_rhs(const Metric& metric) {
  return [metric](const Vec3& x, const Vec3& u) {
    SprayEval se = spray_eval(metric, x, u);
    RhsEval out;
    out.d.dx = u;
    out.d.du = -se.G;
    return out;
  };
}

// ray equations of a refractive index n on a base structure:
// covariant derivative (with reference vector u) of n u equals the raised
// gradient of n; expanded to du = (g^{-1} grad n - u (u.grad n))/n - G(x,u)
inline RayRhs make_fermat_rhs(const Metric& base, ExprPtr index) {
  return [base, index](const Vec3& x, const Vec3& u) {
    Vec3T<Jet> xj;
    for (int i = 0; i < 3; ++i) xj[i] = Jet::variable(i, x[i], 1);
    Jet nj = eval_expr(*index, xj);
    double n = nj.value();
    if (!(n > 0.0)) throw DomainError("refractive index not positive along ray");
    Vec3 grad;
    for (int i = 0; i < 3; ++i) grad[i] = nj.partial(MultiIndex::unit(i));

    SprayEval se = spray_eval(base, x, u);
    Vec3 up = matvec(se.metric.g_inv, grad);
    double ugrad = dot(u, grad);
    RhsEval out;
    out.d.dx = u;
    for (int i = 0; i < 3; ++i) out.d.du[i] = (up[i] - u[i] * ugrad) / n - se.G[i];
    return out;
  };
}

inline RayRhs make_spin_rhs(const Metric& metric, const SpinConstants& k,
                            const SingularTolerances& tol = {}) {
  k.validate();
  return [metric, k, tol](const Vec3& x, const Vec3& u) {
    GeometrySample gs = geometry_sample(metric, SupportElement{x, u});
    SpinTensorSample spin = spin_tensor(gs.metric, k.spin);
    FoliationResult f = foliation_generator(gs, spin, k, tol);
    RhsEval out;
    out.d = f.deriv;
    out.delta = f.coupling.Delta;
    out.sigma = f.coupling.Sigma;
    return out;
  };
}

// ---------------------------------------------------------------------------
// integration

enum class IntegratorMethod { RK4, RK45 };

enum class Termination { ReachedEnd, SingularLocusHit, LeftDomain, MaxSteps, StepUnderflow };

struct IntegratorConfig {
  IntegratorMethod method = IntegratorMethod::RK45;
  double t_end = 10.0;
  double h_init = 1e-2;
  double h_fixed = 1e-3;  // RK4
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  bool renormalize = true;
  Vec3 box_lo{-50.0, -50.0, -50.0};
  Vec3 box_hi{50.0, 50.0, 50.0};
  long max_steps = 2000000;
  std::optional<double> sample_dt;  // record on a fixed grid instead of every step

  void validate() const {
    if (!(t_end > 0) || !(h_init > 0) || !(h_fixed > 0) || !(abs_tol > 0) || !(rel_tol > 0))
      throw ConfigError("integrator tolerances and steps must be positive");
    if (sample_dt && !(*sample_dt > 0)) throw ConfigError("sample_dt must be positive");
  }
};

struct TrajectorySample {
  double t = 0.0;
  Vec3 x{}, u{};
  double F = 0.0;
  double f_drift = 0.0;  // |F - 1| before renormalization
  double delta = std::numeric_limits<double>::quiet_NaN();
  double sigma = std::numeric_limits<double>::quiet_NaN();
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  Termination termination = Termination::ReachedEnd;
  double t_final = 0.0;

  const TrajectorySample& back() const { return samples.back(); }
};

namespace detail {

struct State6 {
  Vec3 x, u;
};

inline State6 axpy(const State6& a, double h, const State6& d) {
  State6 r;
  for (int i = 0; i < 3; ++i) {
    r.x[i] = a.x[i] + h * d.x[i];
    r.u[i] = a.u[i] + h * d.u[i];
  }
  return r;
}

// classical RK4 step
inline State6 rk4_step(const RayRhs& rhs, const State6& y, double h, RhsEval* last) {
  auto f = [&](const State6& s) {
    RhsEval e = rhs(s.x, s.u);
    if (last) *last = e;
    return State6{e.d.dx, e.d.du};
  };
  State6 k1 = f(y);
  State6 k2 = f(axpy(y, 0.5 * h, k1));
  State6 k3 = f(axpy(y, 0.5 * h, k2));
  State6 k4 = f(axpy(y, h, k3));
  State6 r = y;
  for (int i = 0; i < 3; ++i) {
    r.x[i] += h / 6.0 * (k1.x[i] + 2 * k2.x[i] + 2 * k3.x[i] + k4.x[i]);
    r.u[i] += h / 6.0 * (k1.u[i] + 2 * k2.u[i] + 2 * k3.u[i] + k4.u[i]);
  }
  return r;
}

// Dormand-Prince 5(4) pair
struct Dopri45 {
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                          e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                          e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;
};

inline State6 dopri_step(const RayRhs& rhs, const State6& y, double h, State6& err,
                         RhsEval* last) {
  using D = Dopri45;
  auto f = [&](const State6& s) {
    RhsEval e = rhs(s.x, s.u);
    if (last) *last = e;
    return State6{e.d.dx, e.d.du};
  };
  State6 k1 = f(y);
  State6 k2 = f(axpy(y, h * D::a21, k1));
  State6 y3 = y;
  for (int i = 0; i < 3; ++i) {
    y3.x[i] += h * (D::a31 * k1.x[i] + D::a32 * k2.x[i]);
    y3.u[i] += h * (D::a31 * k1.u[i] + D::a32 * k2.u[i]);
  }
  State6 k3 = f(y3);
  State6 y4 = y;
  for (int i = 0; i < 3; ++i) {
    y4.x[i] += h * (D::a41 * k1.x[i] + D::a42 * k2.x[i] + D::a43 * k3.x[i]);
    y4.u[i] += h * (D::a41 * k1.u[i] + D::a42 * k2.u[i] + D::a43 * k3.u[i]);
  }
  State6 k4 = f(y4);
  State6 y5 = y;
  for (int i = 0; i < 3; ++i) {
    y5.x[i] += h * (D::a51 * k1.x[i] + D::a52 * k2.x[i] + D::a53 * k3.x[i] + D::a54 * k4.x[i]);
    y5.u[i] += h * (D::a51 * k1.u[i] + D::a52 * k2.u[i] + D::a53 * k3.u[i] + D::a54 * k4.u[i]);
  }
  State6 k5 = f(y5);
  State6 y6 = y;
  for (int i = 0; i < 3; ++i) {
    y6.x[i] += h * (D::a61 * k1.x[i] + D::a62 * k2.x[i] + D::a63 * k3.x[i] + D::a64 * k4.x[i] +
                    D::a65 * k5.x[i]);
    y6.u[i] += h * (D::a61 * k1.u[i] + D::a62 * k2.u[i] + D::a63 * k3.u[i] + D::a64 * k4.u[i] +
                    D::a65 * k5.u[i]);
  }
  State6 k6 = f(y6);
  State6 y1 = y;
  for (int i = 0; i < 3; ++i) {
    y1.x[i] += h * (D::b1 * k1.x[i] + D::b3 * k3.x[i] + D::b4 * k4.x[i] + D::b5 * k5.x[i] +
                    D::b6 * k6.x[i]);
    y1.u[i] += h * (D::b1 * k1.u[i] + D::b3 * k3.u[i] + D::b4 * k4.u[i] + D::b5 * k5.u[i] +
                    D::b6 * k6.u[i]);
  }
  State6 k7 = f(y1);
  for (int i = 0; i < 3; ++i) {
    err.x[i] = h * (D::e1 * k1.x[i] + D::e3 * k3.x[i] + D::e4 * k4.x[i] + D::e5 * k5.x[i] +
                    D::e6 * k6.x[i] + D::e7 * k7.x[i]);
    err.u[i] = h * (D::e1 * k1.u[i] + D::e3 * k3.u[i] + D::e4 * k4.u[i] + D::e5 * k5.u[i] +
                    D::e6 * k6.u[i] + D::e7 * k7.u[i]);
  }
  return y1;
}

}  // namespace detail

class Integrator {
 public:
  Integrator(RayRhs rhs, std::function<double(const Vec3&, const Vec3&)> f_value,
             IntegratorConfig config)
      : rhs_(std::move(rhs)), f_(std::move(f_value)), cfg_(config) {
    cfg_.validate();
  }

  Trajectory run(RayState start) const {
    Trajectory traj;
    detail::State6 y{start.x, start.u};
    // put the initial direction on the indicatrix once
    double f0 = f_(y.x, y.u);
    for (int i = 0; i < 3; ++i) y.u[i] /= f0;
    double t = start.t;

    RhsEval eval0;
    try {
      eval0 = rhs_(y.x, y.u);
    } catch (const SingularLocus& sl) {
      traj.samples.push_back(make_sample(t, y, sl.delta, sl.sigma));
      traj.termination = Termination::SingularLocusHit;
      traj.t_final = t;
      return traj;
    }
    traj.samples.push_back(make_sample(t, y, eval0.delta, eval0.sigma));

    double next_sample = cfg_.sample_dt ? t + *cfg_.sample_dt : 0.0;
    double h = (cfg_.method == IntegratorMethod::RK4) ? cfg_.h_fixed : cfg_.h_init;
    double prev_delta = eval0.delta, prev_sigma = eval0.sigma;
    long steps = 0;

    while (t < cfg_.t_end - 1e-15) {
      if (++steps > cfg_.max_steps) {
        traj.termination = Termination::MaxSteps;
        break;
      }
      double h_try = std::min(h, cfg_.t_end - t);
      if (cfg_.sample_dt && next_sample > t && next_sample < t + h_try + 1e-15)
        h_try = next_sample - t;

      detail::State6 y1, err{};
      RhsEval last;
      bool singular = false, out_of_domain = false;
      double sing_delta = 0, sing_sigma = 0;
      try {
        if (cfg_.method == IntegratorMethod::RK4) {
          y1 = detail::rk4_step(rhs_, y, h_try, &last);
        } else {
          y1 = detail::dopri_step(rhs_, y, h_try, err, &last);
          double sc = error_norm(y, y1, err);
          if (sc > 1.0) {
            h = std::max(h_try * std::max(0.2, 0.9 * std::pow(sc, -0.2)), 1e-14);
            if (h < 1e-13) {
              traj.termination = classify_underflow(y);
              break;
            }
            continue;  // reject
          }
          h = h_try * std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(sc, 1e-10), -0.2)));
        }
      } catch (const SingularLocus& sl) {
        singular = true;
        sing_delta = sl.delta;
        sing_sigma = sl.sigma;
      } catch (const DomainError&) {
        out_of_domain = true;  // ray left the region where the metric is defined
      } catch (const NonPositiveDefinite&) {
        out_of_domain = true;
      }

      if (out_of_domain) {
        if (h_try > 1e-12) {
          h = h_try * 0.5;
          continue;
        }
        traj.termination = Termination::LeftDomain;
        break;
      }
      if (singular) {
        // a stage stepped over the singular locus; shrink toward it
        if (h_try > 1e-12) {
          h = h_try * 0.5;
          continue;
        }
        traj.termination = Termination::SingularLocusHit;
        prev_delta = sing_delta;
        prev_sigma = sing_sigma;
        break;
      }

      // accepted
      double t1 = t + h_try;
      double fdrift = std::abs(f_(y1.x, y1.u) - 1.0);
      if (cfg_.renormalize) {
        double fv = f_(y1.x, y1.u);
        for (int i = 0; i < 3; ++i) y1.u[i] /= fv;
      }

      // singular-locus event: sign change or tolerance crossing of the
      // diagnostics between accepted states
      if (std::isfinite(last.delta) && std::isfinite(prev_delta)) {
        bool crossed = (last.delta == 0.0) || (prev_delta * last.delta < 0.0) ||
                       (last.sigma == 0.0) || (prev_sigma * last.sigma < 0.0);
        if (crossed) {
          double tc = bisect_crossing(y, t, h_try, prev_delta, prev_sigma);
          traj.termination = Termination::SingularLocusHit;
          traj.t_final = tc;
          return finish_event(std::move(traj), y, t, tc, prev_delta, prev_sigma);
        }
      }

      y = y1;
      t = t1;
      prev_delta = last.delta;
      prev_sigma = last.sigma;
      if (cfg_.method == IntegratorMethod::RK4) h = cfg_.h_fixed;

      bool record = true;
      if (cfg_.sample_dt) {
        record = std::abs(t - next_sample) < 1e-12 || t >= cfg_.t_end - 1e-15;
        if (std::abs(t - next_sample) < 1e-12) next_sample += *cfg_.sample_dt;
      }
      if (record) {
        TrajectorySample s = make_sample(t, y, last.delta, last.sigma);
        s.f_drift = fdrift;
        traj.samples.push_back(s);
      }

      if (!inside_box(y.x)) {
        traj.termination = Termination::LeftDomain;
        break;
      }
    }
    traj.t_final = t;
    return traj;
  }

 private:
  TrajectorySample make_sample(double t, const detail::State6& y, double delta,
                               double sigma) const {
    TrajectorySample s;
    s.t = t;
    s.x = y.x;
    s.u = y.u;
    s.F = f_(y.x, y.u);
    s.f_drift = std::abs(s.F - 1.0);
    s.delta = delta;
    s.sigma = sigma;
    return s;
  }

  // a step-size collapse right at the edge of the metric's domain of
  // definition is a domain exit, not an integrator failure: peek ahead
  // along the ray and see whether the metric stops being evaluable
  Termination classify_underflow(const detail::State6& y) const {
    double un = norm(y.u);
    if (un > 0) {
      Vec3 dir = (1.0 / un) * y.u;
      for (double d : {1e-8, 1e-6, 1e-4, 1e-2, 0.3, 1.0}) {
        try {
          (void)f_(y.x + d * dir, y.u);
        } catch (const DomainError&) {
          return Termination::LeftDomain;
        } catch (const NonPositiveDefinite&) {
          return Termination::LeftDomain;
        }
      }
    }
    return Termination::StepUnderflow;
  }

  bool inside_box(const Vec3& x) const {
    for (int i = 0; i < 3; ++i)
      if (x[i] < cfg_.box_lo[i] || x[i] > cfg_.box_hi[i]) return false;
    return true;
  }

  double error_norm(const detail::State6& y0, const detail::State6& y1,
                    const detail::State6& err) const {
    double acc = 0.0;
    for (int i = 0; i < 3; ++i) {
      double scx = cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(y0.x[i]), std::abs(y1.x[i]));
      double scu = cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(y0.u[i]), std::abs(y1.u[i]));
      acc += (err.x[i] / scx) * (err.x[i] / scx) + (err.u[i] / scu) * (err.u[i] / scu);
    }
    return std::sqrt(acc / 6.0);
  }

  // locate the diagnostic sign change in (t0, t0+h] to 1e-12 in t
  double bisect_crossing(const detail::State6& y0, double t0, double h, double d0,
                         double s0) const {
    double lo = 0.0, hi = h;
    auto diag_flipped = [&](double dt) {
      detail::State6 err{};
      RhsEval ev;
      try {
        detail::State6 ym = detail::dopri_step(rhs_, y0, dt, err, &ev);
        (void)ym;
      } catch (const SingularLocus&) {
        return true;
      }
      return (std::isfinite(d0) && d0 * ev.delta <= 0.0) ||
             (std::isfinite(s0) && s0 * ev.sigma <= 0.0);
    };
    for (int it = 0; it < 80 && hi - lo > 1e-12; ++it) {
      double mid = 0.5 * (lo + hi);
      if (diag_flipped(mid))
        hi = mid;
      else
        lo = mid;
    }
    return t0 + lo;
  }

  Trajectory finish_event(Trajectory traj, const detail::State6& y0, double t0, double tc,
                          double, double) const {
    // advance to just before the crossing and record the last regular state
    double dt = tc - t0;
    if (dt > 1e-12) {
      detail::State6 err{};
      RhsEval ev;
      try {
        detail::State6 yc = detail::dopri_step(rhs_, y0, dt, err, &ev);
        if (cfg_.renormalize) {
          double fv = f_(yc.x, yc.u);
          for (int i = 0; i < 3; ++i) yc.u[i] /= fv;
        }
        traj.samples.push_back(make_sample(tc, yc, ev.delta, ev.sigma));
      } catch (const SingularLocus&) {
      }
    }
    traj.t_final = tc;
    return traj;
  }

  RayRhs rhs_;
  std::function<double(const Vec3&, const Vec3&)> f_;
  IntegratorConfig cfg_;
};

inline Trajectory integrate(const RayRhs& rhs,
                            const std::function<double(const Vec3&, const Vec3&)>& f_value,
                            const RayState& start, const IntegratorConfig& config) {
  return Integrator(rhs, f_value, config).run(start);
}

// ---------------------------------------------------------------------------
// shift measurement between two trajectories on a shared grid

struct ShiftReport {
  Vec3 separation{};        // final point of `plus` minus final point of `minus`
  double magnitude = 0.0;
  Vec3 transverse{};        // component along (mean direction x reference axis)
  double transverse_signed = 0.0;
  bool has_transverse = false;
};

inline ShiftReport transverse_shift(const Trajectory& plus, const Trajectory& minus,
                                    std::optional<Vec3> grad_direction = {}) {
  if (plus.samples.size() != minus.samples.size())
    throw GridMismatch("trajectories have different sample counts");
  for (std::size_t i = 0; i < plus.samples.size(); ++i)
    if (std::abs(plus.samples[i].t - minus.samples[i].t) > 1e-9)
      throw GridMismatch("trajectories have different parameter grids");

  ShiftReport out;
  out.separation = plus.back().x - minus.back().x;
  out.magnitude = norm(out.separation);
  if (grad_direction) {
    Vec3 mean_dir = normalized(plus.back().u + minus.back().u);
    Vec3 axis = cross(mean_dir, *grad_direction);
    double n = norm(axis);
    if (n > 1e-12) {
      axis = (1.0 / n) * axis;
      out.transverse_signed = dot(out.separation, axis);
      out.transverse = out.transverse_signed * axis;
      out.has_transverse = true;
    }
  }
  return out;
}

}  // namespace finsleray
