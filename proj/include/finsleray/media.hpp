#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "finsleray/expression.hpp"
#include "finsleray/linalg.hpp"
#include "finsleray/rng.hpp"

namespace finsleray {

// A point of the slit tangent bundle: position x and a nonzero fiber
// direction y (unnormalized support direction).
struct SupportElement {
  Vec3 x{};
  Vec3 y{};
};

enum class Branch { Plus, Minus };

struct EuclideanSpec {};

struct ConformalSpec {
  ExprPtr index;  // refractive index n(x) > 0, F = n |y|
};

// symmetric form entries ordered g11, g12, g13, g22, g23, g33
using SymFormExpr = std::array<ExprPtr, 6>;

struct RiemannianSpec {
  SymFormExpr g;
};

// extraordinary metric F_e = a(y,y)/sqrt(b(y,y)) of a uniaxial medium
struct UniaxialSpec {
  SymFormExpr a, b;
};

struct BiaxialSpec {
  SymFormExpr a, b_plus, b_minus;
  Branch branch = Branch::Plus;
};

// anisotropic dielectric crystal with principal velocities v1 >= v2 >= v3
// and optical axes e', e''; F = |y|^2 / sqrt(A|y|^2 + B[<e',y><e'',y> -/+ |e'xy||e''xy|])
// with A = (v1^2+v3^2)/2, B = (v1^2-v3^2)/2. Branch Plus carries the minus
// sign under the root. Every scalar may depend on position; axes are
// renormalized at each evaluation point.
struct CrystalSpec {
  ExprPtr v1, v2, v3;
  std::array<ExprPtr, 3> e_prime, e_double_prime;
  Branch branch = Branch::Plus;
};

struct MediumSpec {
  std::variant<EuclideanSpec, ConformalSpec, RiemannianSpec, UniaxialSpec, BiaxialSpec, CrystalSpec>
      value;

  bool riemannian_class() const {
    return std::holds_alternative<EuclideanSpec>(value) ||
           std::holds_alternative<ConformalSpec>(value) ||
           std::holds_alternative<RiemannianSpec>(value);
  }
};

namespace detail {

inline double sqrt(double v) { return std::sqrt(v); }
using ::finsleray::sqrt;  // jet overload

template <class T>
T lift(double v) {
  if constexpr (std::is_same_v<T, double>)
    return v;
  else
    return T::constant(v);
}

template <class T>
T dot3(const Vec3T<T>& a, const Vec3T<T>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

template <class T>
Vec3T<T> cross3(const Vec3T<T>& a, const Vec3T<T>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

template <class T>
Mat3T<T> eval_sym_form(const SymFormExpr& q, const Vec3T<T>& x) {
  Mat3T<T> m;
  m[0][0] = eval_expr(*q[0], x);
  m[0][1] = eval_expr(*q[1], x);
  m[0][2] = eval_expr(*q[2], x);
  m[1][1] = eval_expr(*q[3], x);
  m[1][2] = eval_expr(*q[4], x);
  m[2][2] = eval_expr(*q[5], x);
  m[1][0] = m[0][1];
  m[2][0] = m[0][2];
  m[2][1] = m[1][2];
  return m;
}

template <class T>
T form_apply(const Mat3T<T>& m, const Vec3T<T>& y) {
  T r = lift<T>(0.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r += m[i][j] * y[i] * y[j];
  return r;
}

inline double value_of(double v) { return v; }
inline double value_of(const Jet& j) { return j.value(); }

template <class T>
T medium_f2(const MediumSpec& spec, const Vec3T<T>& x, const Vec3T<T>& y) {
  return std::visit(
      [&](const auto& s) -> T {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, EuclideanSpec>) {
          return dot3(y, y);
        } else if constexpr (std::is_same_v<S, ConformalSpec>) {
          T n = eval_expr(*s.index, x);
          if (value_of(n) <= 0.0) throw DomainError("refractive index not positive");
          return n * n * dot3(y, y);
        } else if constexpr (std::is_same_v<S, RiemannianSpec>) {
          return form_apply(eval_sym_form(s.g, x), y);
        } else if constexpr (std::is_same_v<S, UniaxialSpec>) {
          T ay = form_apply(eval_sym_form(s.a, x), y);
          T by = form_apply(eval_sym_form(s.b, x), y);
          if (value_of(by) <= 0.0) throw DomainError("uniaxial form b(y,y) not positive");
          return ay * ay / by;
        } else if constexpr (std::is_same_v<S, BiaxialSpec>) {
          T ay = form_apply(eval_sym_form(s.a, x), y);
          T by = form_apply(eval_sym_form(s.branch == Branch::Plus ? s.b_plus : s.b_minus, x), y);
          if (value_of(by) <= 0.0) throw DomainError("biaxial form b(y,y) not positive");
          return ay * ay / by;
        } else {
          static_assert(std::is_same_v<S, CrystalSpec>);
          T v1 = eval_expr(*s.v1, x);
          T v3 = eval_expr(*s.v3, x);
          if (value_of(v1) <= 0.0 || value_of(v3) <= 0.0)
            throw DomainError("principal velocity not positive");
          T A = (v1 * v1 + v3 * v3) * 0.5;
          T B = (v1 * v1 - v3 * v3) * 0.5;
          Vec3T<T> ep, epp;
          for (int i = 0; i < 3; ++i) {
            ep[i] = eval_expr(*s.e_prime[i], x);
            epp[i] = eval_expr(*s.e_double_prime[i], x);
          }
          T epn = sqrt(dot3(ep, ep));
          T eppn = sqrt(dot3(epp, epp));
          for (int i = 0; i < 3; ++i) {
            ep[i] = ep[i] / epn;
            epp[i] = epp[i] / eppn;
          }
          T yy = dot3(y, y);
          Vec3T<T> c1 = cross3(ep, y), c2 = cross3(epp, y);
          T n1 = sqrt(dot3(c1, c1));
          T n2 = sqrt(dot3(c2, c2));
          double sign = (s.branch == Branch::Plus) ? -1.0 : 1.0;
          T bracket = A * yy + B * (dot3(ep, y) * dot3(epp, y) + sign * (n1 * n2));
          if (value_of(bracket) <= 0.0)
            throw DomainError("crystal bracket not positive for this direction");
          return yy * yy / bracket;
        }
      },
      spec.value);
}

}  // namespace detail

// Finsler metric built from a medium description; evaluates F^2 on plain
// reals or on jets through one shared template.
class Metric {
 public:
  Metric() : spec_{EuclideanSpec{}} {}
  explicit Metric(MediumSpec spec) : spec_(std::move(spec)) { validate(); }

  const MediumSpec& spec() const { return spec_; }

  double f2(const Vec3& x, const Vec3& y) const { return detail::medium_f2<double>(spec_, x, y); }

  double f(const Vec3& x, const Vec3& y) const {
    double v = f2(x, y);
    if (v <= 0.0) throw DomainError("F^2 not positive at support element");
    return std::sqrt(v);
  }

  Jet f2_jet(const SupportElement& se, int order) const {
    Vec3T<Jet> xj, yj;
    for (int i = 0; i < 3; ++i) {
      xj[i] = Jet::variable(i, se.x[i], order);
      yj[i] = Jet::variable(3 + i, se.y[i], order);
    }
    return detail::medium_f2<Jet>(spec_, xj, yj);
  }

  bool riemannian_class() const { return spec_.riemannian_class(); }

 private:
  void validate() const {
    if (const auto* c = std::get_if<CrystalSpec>(&spec_.value)) {
      Vec3 zero{};
      Vec3 ep, epp;
      for (int i = 0; i < 3; ++i) {
        ep[i] = eval_expr<double>(*c->e_prime[i], zero);
        epp[i] = eval_expr<double>(*c->e_double_prime[i], zero);
      }
      if (norm(ep) < 1e-12 || norm(epp) < 1e-12) throw SpecError("crystal axis degenerate at origin");
      double v1 = eval_expr<double>(*c->v1, zero);
      double v2 = eval_expr<double>(*c->v2, zero);
      double v3 = eval_expr<double>(*c->v3, zero);
      if (!(v1 > 0 && v2 > 0 && v3 > 0)) throw SpecError("principal velocities must be positive");
      if (v1 < v2 || v2 < v3) throw SpecError("principal velocities must satisfy v1 >= v2 >= v3");
    }
  }

  MediumSpec spec_;
};

// ---------------------------------------------------------------------------
// admissible sampling and convexity scanning

struct SampleBox {
  Vec3 lo{-1.0, -1.0, -1.0};
  Vec3 hi{1.0, 1.0, 1.0};
};

// Directions where the metric is smooth and its defining denominators are
// safely positive. Crystal media additionally keep a margin away from the
// optical axes, where the square-root factors are not differentiable.
inline bool direction_admissible(const MediumSpec& spec, const Vec3& x, const Vec3& y) {
  if (const auto* c = std::get_if<CrystalSpec>(&spec.value)) {
    Vec3T<double> ep, epp;
    for (int i = 0; i < 3; ++i) {
      ep[i] = eval_expr<double>(*c->e_prime[i], x);
      epp[i] = eval_expr<double>(*c->e_double_prime[i], x);
    }
    Vec3 yn = normalized(y);
    double m = norm(cross(normalized(ep), yn)) * norm(cross(normalized(epp), yn));
    if (m < 0.05) return false;
  }
  try {
    double v = detail::medium_f2<double>(spec, x, y);
    return v > 0.0 && std::isfinite(v);
  } catch (const DomainError&) {
    return false;
  }
}

struct ConvexitySample {
  Vec3 x, y;
  double min_eigenvalue = 0.0;
  double trace = 0.0;
  bool positive_definite = false;
  bool sufficient_condition = false;  // b/sqrt(2) < a < b sqrt(2) at (x, y)
  bool sufficient_applicable = false;
};

struct ConvexityReport {
  std::vector<ConvexitySample> samples;
  std::vector<ConvexitySample> failures;  // non positive-definite samples
  long tested = 0;
  long rejected = 0;  // inadmissible directions skipped
  long sufficient_violations = 0;
  bool all_positive_definite() const { return failures.empty(); }
};

namespace detail {

// y-Hessian of F^2/2 straight from an order-2 jet; local copy so sampling
// does not pull in the full geometry pipeline
inline Mat3 hessian_g(const Metric& metric, const SupportElement& se) {
  Jet j = metric.f2_jet(se, 2);
  Mat3 g;
  for (int i = 0; i < 3; ++i)
    for (int k = i; k < 3; ++k) {
      MultiIndex m = MultiIndex::unit(3 + i).plus(3 + k);
      g[i][k] = g[k][i] = 0.5 * j.partial(m);
    }
  return g;
}

}  // namespace detail

inline SupportElement sample_admissible(const MediumSpec& spec, SplitMix64& rng,
                                        const SampleBox& box = {}) {
  Metric metric(spec);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    SupportElement se{rng.in_box(box.lo, box.hi), rng.unit_vector()};
    if (!direction_admissible(spec, se.x, se.y)) continue;
    try {
      Mat3 g = detail::hessian_g(metric, se);
      double tr = g[0][0] + g[1][1] + g[2][2];
      if (min_eigenvalue_sym3(g) > 1e-10 * tr) return se;
    } catch (const Error&) {
    }
  }
  throw DomainError("no admissible support element found in 10000 attempts");
}

inline ConvexityReport check_strong_convexity(const MediumSpec& spec, int sample_count,
                                              std::uint64_t seed, const SampleBox& box = {}) {
  Metric metric(spec);
  SplitMix64 rng(seed);
  ConvexityReport report;
  const auto* uni = std::get_if<UniaxialSpec>(&spec.value);
  const auto* bi = std::get_if<BiaxialSpec>(&spec.value);
  while (report.tested < sample_count) {
    SupportElement se{rng.in_box(box.lo, box.hi), rng.unit_vector()};
    if (!direction_admissible(spec, se.x, se.y)) {
      report.rejected++;
      if (report.rejected > 100 * sample_count + 1000)
        throw DomainError("admissible cone too small to sample");
      continue;
    }
    ConvexitySample sample;
    sample.x = se.x;
    sample.y = se.y;
    try {
      Mat3 g = detail::hessian_g(metric, se);
      sample.trace = g[0][0] + g[1][1] + g[2][2];
      sample.min_eigenvalue = min_eigenvalue_sym3(g);
      sample.positive_definite = sample.min_eigenvalue > 1e-10 * sample.trace;
    } catch (const Error&) {
      sample.positive_definite = false;
      sample.min_eigenvalue = std::nan("");
    }
    if (uni || bi) {
      sample.sufficient_applicable = true;
      const SymFormExpr& fa = uni ? uni->a : bi->a;
      const SymFormExpr& fb = uni ? uni->b : (bi->branch == Branch::Plus ? bi->b_plus : bi->b_minus);
      double ay = detail::form_apply(detail::eval_sym_form(fa, se.x), se.y);
      double by = detail::form_apply(detail::eval_sym_form(fb, se.x), se.y);
      sample.sufficient_condition = (by / std::sqrt(2.0) < ay) && (ay < by * std::sqrt(2.0));
      if (!sample.sufficient_condition) report.sufficient_violations++;
    }
    if (!sample.positive_definite) report.failures.push_back(sample);
    report.samples.push_back(sample);
    report.tested++;
  }
  return report;
}

// ---------------------------------------------------------------------------
// standard catalog

struct CatalogEntry {
  std::string name;
  MediumSpec spec;
};

inline SymFormExpr parse_sym_form(const std::array<const char*, 6>& s) {
  return {parse_field(s[0]), parse_field(s[1]), parse_field(s[2]),
          parse_field(s[3]), parse_field(s[4]), parse_field(s[5])};
}

// One medium per supported family; the position-dependent ones keep every
// curvature tensor in play while staying strongly convex on [-1,1]^3.
inline std::vector<CatalogEntry> standard_catalog() {
  std::vector<CatalogEntry> cat;
  cat.push_back({"euclidean", MediumSpec{EuclideanSpec{}}});
  cat.push_back({"conformal", MediumSpec{ConformalSpec{parse_field("1 + 0.1*x1")}}});
  cat.push_back({"riemannian",
                 MediumSpec{RiemannianSpec{parse_sym_form(
                     {"exp(0.2*x2)", "0.1*x3", "0", "exp(0.2*x3)", "0", "exp(0.2*x1)"})}}});
  cat.push_back({"uniaxial",
                 MediumSpec{UniaxialSpec{parse_sym_form({"1", "0", "0", "1", "0", "1"}),
                                         parse_sym_form({"1.2 + 0.1*x1", "0", "0", "1", "0",
                                                         "0.9 + 0.05*x2"})}}});
  // weak biaxial crystal under a common position-dependent scale; axes from
  // sin^2(beta) = (v1^2-v2^2)/(v1^2-v3^2) for v = (1.05, 1.00, 0.95)
  CrystalSpec crys;
  crys.v1 = parse_field("1.05*(1 + 0.05*x1)");
  crys.v2 = parse_field("1.00*(1 + 0.05*x1)");
  crys.v3 = parse_field("0.95*(1 + 0.05*x1)");
  crys.e_prime = {parse_field("sqrt(0.5125)"), parse_field("0"), parse_field("sqrt(0.4875)")};
  crys.e_double_prime = {parse_field("-sqrt(0.5125)"), parse_field("0"), parse_field("sqrt(0.4875)")};
  crys.branch = Branch::Plus;
  cat.push_back({"crystal", MediumSpec{std::move(crys)}});
  return cat;
}

}  // namespace finsleray
