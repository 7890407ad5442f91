#include <doctest.h>

#include "finsleray/geometry.hpp"
#include "support.hpp"

using namespace finsleray;

namespace {

MediumSpec uniaxial_diag(double b1, double b2, double b3) {
  char buf1[32], buf2[32], buf3[32];
  std::snprintf(buf1, sizeof(buf1), "%.17g", b1);
  std::snprintf(buf2, sizeof(buf2), "%.17g", b2);
  std::snprintf(buf3, sizeof(buf3), "%.17g", b3);
  return MediumSpec{UniaxialSpec{
      parse_sym_form({"1", "0", "0", "1", "0", "1"}),
      {parse_field(buf1), parse_field("0"), parse_field("0"), parse_field(buf2), parse_field("0"),
       parse_field(buf3)}}};
}

MediumSpec crystal(const char* v1, const char* v2, const char* v3, Vec3 axis1, Vec3 axis2,
                   Branch branch) {
  CrystalSpec c;
  c.v1 = parse_field(v1);
  c.v2 = parse_field(v2);
  c.v3 = parse_field(v3);
  for (int i = 0; i < 3; ++i) {
    c.e_prime[static_cast<std::size_t>(i)] = make_number(axis1[i]);
    c.e_double_prime[static_cast<std::size_t>(i)] = make_number(axis2[i]);
  }
  c.branch = branch;
  return MediumSpec{std::move(c)};
}

}  // namespace

TEST_CASE("euclidean medium is the norm") {
  Metric m{MediumSpec{EuclideanSpec{}}};
  CHECK(m.f({0, 0, 0}, {3, 4, 0}) == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("isotropic crystal collapses to a single euclidean metric on both branches") {
  for (Branch br : {Branch::Plus, Branch::Minus}) {
    Metric m(crystal("2", "2", "2", {0, 0, 1}, {0, 0, 1}, br));
    SplitMix64 rng(2);
    for (int n = 0; n < 50; ++n) {
      Vec3 y = rng.unit_vector();
      CHECK(m.f({0.2, -0.1, 0.4}, y) == doctest::Approx(norm(y) / 2.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("uniaxial crystal value from direct substitution") {
  Metric m(crystal("1", "1", "0.8", {0, 0, 1}, {0, 0, 1}, Branch::Plus));
  CHECK(m.f({0, 0, 0}, {1, 0, 0}) == doctest::Approx(1.25).epsilon(1e-15));
}

TEST_CASE("uniaxial crystal branches reproduce the closed-form limits") {
  // v1 = v2: branch- is the euclidean metric /v1, branch+ the quadratic-form
  // metric with b = v3^2 I + (v1^2-v3^2) e e^T
  const double v1 = 1.1, v3 = 0.85;
  Vec3 axis = normalized(Vec3{0.3, -0.2, 0.95});
  Metric minus(crystal("1.1", "1.1", "0.85", axis, axis, Branch::Minus));
  Metric plus(crystal("1.1", "1.1", "0.85", axis, axis, Branch::Plus));
  SplitMix64 rng(77);
  for (int n = 0; n < 200; ++n) {
    Vec3 y = rng.unit_vector();
    double fo = norm(y) / v1;
    double denom = v3 * v3 * dot(y, y) + (v1 * v1 - v3 * v3) * dot(axis, y) * dot(axis, y);
    double fe = dot(y, y) / std::sqrt(denom);
    CHECK(minus.f({0, 0, 0}, y) == doctest::Approx(fo).epsilon(1e-12));
    CHECK(plus.f({0, 0, 0}, y) == doctest::Approx(fe).epsilon(1e-12));
  }
}

TEST_CASE("crystal spec validation") {
  CHECK_THROWS_AS(Metric(crystal("1", "1", "1.4", {0, 0, 1}, {0, 0, 1}, Branch::Plus)), SpecError);
  CHECK_THROWS_AS(Metric(crystal("-1", "1", "0.8", {0, 0, 1}, {0, 0, 1}, Branch::Plus)), SpecError);
  CHECK_THROWS_AS(Metric(crystal("1", "1", "0.8", {0, 0, 0}, {0, 0, 1}, Branch::Plus)), SpecError);
}

TEST_CASE("crystal directions on the optical axes are rejected as inadmissible") {
  auto cat = standard_catalog();
  const MediumSpec& crys = cat[4].spec;
  const auto& c = std::get<CrystalSpec>(crys.value);
  Vec3 axis;
  for (int i = 0; i < 3; ++i) axis[i] = eval_expr<double>(*c.e_prime[static_cast<std::size_t>(i)], {0, 0, 0});
  axis = normalized(axis);
  CHECK_FALSE(direction_admissible(crys, {0, 0, 0}, axis));
  CHECK(direction_admissible(crys, {0, 0, 0}, {0, 1, 0}));
}

TEST_CASE("convexity: euclidean and matched uniaxial pass everywhere") {
  ConvexityReport r1 = check_strong_convexity(MediumSpec{EuclideanSpec{}}, 100, 9);
  CHECK(r1.all_positive_definite());
  ConvexityReport r2 = check_strong_convexity(uniaxial_diag(1, 1, 1), 100, 9);
  CHECK(r2.all_positive_definite());
  CHECK(r2.sufficient_violations == 0);  // 1/sqrt(2) < 1 < sqrt(2)
}

TEST_CASE("convexity: isotropic b=2.5 fails the sufficient bound but stays convex") {
  ConvexityReport r = check_strong_convexity(uniaxial_diag(2.5, 2.5, 2.5), 200, 10);
  CHECK(r.sufficient_violations == r.tested);  // bound violated at every sample
  CHECK(r.all_positive_definite());            // yet the scan finds no failure
}

TEST_CASE("convexity: strongly anisotropic b flags real failures") {
  ConvexityReport r = check_strong_convexity(uniaxial_diag(2.5, 1, 1), 400, 11);
  CHECK(!r.all_positive_definite());
  CHECK(r.sufficient_violations > 0);
  // the scan records the failing support elements
  CHECK(!r.failures.empty());
  CHECK(!r.failures.front().positive_definite);
}

TEST_CASE("biaxial branches select their quadratic form") {
  BiaxialSpec b;
  b.a = parse_sym_form({"1", "0", "0", "1", "0", "1"});
  b.b_plus = parse_sym_form({"0.9", "0", "0", "1.05", "0", "1"});
  b.b_minus = parse_sym_form({"1.15", "0", "0", "0.95", "0", "1"});
  b.branch = Branch::Plus;
  MediumSpec plus{b};
  b.branch = Branch::Minus;
  MediumSpec minus{b};
  Metric mp(plus), mm(minus);
  SplitMix64 rng(12);
  for (int n = 0; n < 40; ++n) {
    Vec3 y = rng.unit_vector();
    double ay = dot(y, y);
    double bp = 0.9 * y[0] * y[0] + 1.05 * y[1] * y[1] + y[2] * y[2];
    double bm = 1.15 * y[0] * y[0] + 0.95 * y[1] * y[1] + y[2] * y[2];
    CHECK(mp.f({0, 0, 0}, y) == doctest::Approx(ay / std::sqrt(bp)).epsilon(1e-14));
    CHECK(mm.f({0, 0, 0}, y) == doctest::Approx(ay / std::sqrt(bm)).epsilon(1e-14));
  }
  CHECK(check_strong_convexity(plus, 150, 3).all_positive_definite());
  CHECK(check_strong_convexity(minus, 150, 3).all_positive_definite());
}

TEST_CASE("every catalog metric is 1-homogeneous and has a symmetric Hessian") {
  for (const auto& entry : standard_catalog()) {
    Metric metric(entry.spec);
    SplitMix64 rng(40);
    for (int n = 0; n < 25; ++n) {
      SupportElement se = sample_admissible(entry.spec, rng);
      double f = metric.f(se.x, se.y);
      for (double lam : {0.5, 2.0, 7.0}) {
        double fs = metric.f(se.x, lam * se.y);
        CHECK(fs == doctest::Approx(lam * f).epsilon(1e-12));
      }
      MetricSample ms = fundamental_tensor(metric, se);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(ms.g[i][j] == ms.g[j][i]);
    }
  }
}

TEST_CASE("catalog media are strongly convex on the sampling box") {
  for (const auto& entry : standard_catalog()) {
    ConvexityReport r = check_strong_convexity(entry.spec, 150, 123);
    CHECK_MESSAGE(r.all_positive_definite(), entry.name);
  }
}
