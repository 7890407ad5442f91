#include <doctest.h>

#include "finsleray/geometry.hpp"
#include "support.hpp"

using namespace finsleray;

namespace {

MultiIndex mi(std::initializer_list<int> orders) {
  MultiIndex m;
  int v = 0;
  for (int o : orders) m.e[static_cast<std::size_t>(v++)] = static_cast<std::uint8_t>(o);
  return m;
}

}  // namespace

TEST_CASE("basis enumerates all indices with total<=4 and x-degree<=2") {
  const auto& basis = detail::JetBasis::get();
  CHECK(basis.size() == kJetSize);
  // 35 (x-deg 0) + 3*20 (x-deg 1) + 6*10 (x-deg 2)
  CHECK(kJetSize == 155);
  for (int i = 0; i < basis.size(); ++i) CHECK(basis.index(i).valid());
}

TEST_CASE("constant field has zero derivatives") {
  auto field = [](const std::array<Jet, 6>&) { return Jet::constant(5.0); };
  Jet j = evaluate_jet(field, {0.3, -1, 2, 0.5, 0, 1}, 2);
  CHECK(j.value() == 5.0);
  CHECK(j.partial(mi({1, 0, 0, 0, 0, 0})) == 0.0);
  CHECK(j.partial(mi({0, 0, 0, 1, 1, 0})) == 0.0);
}

TEST_CASE("linear fiber coordinate field") {
  auto field = [](const std::array<Jet, 6>& v) { return v[5]; };
  Jet j = evaluate_jet(field, {0, 0, 0, 0, 0, 1}, 1);
  CHECK(j.value() == 1.0);
  CHECK(j.partial(mi({0, 0, 0, 0, 0, 1})) == 1.0);
  CHECK(j.partial(mi({0, 0, 0, 1, 0, 0})) == 0.0);
  CHECK(j.partial(mi({1, 0, 0, 0, 0, 0})) == 0.0);
}

TEST_CASE("quadratic form Hessian reproduces 2 delta_ij") {
  auto field = [](const std::array<Jet, 6>& v) {
    return v[3] * v[3] + v[4] * v[4] + v[5] * v[5];
  };
  Jet j = evaluate_jet(field, {0, 0, 0, 0, 0, 1}, 2);
  for (int a = 3; a < 6; ++a)
    for (int b = 3; b < 6; ++b) {
      MultiIndex m = MultiIndex::unit(a).plus(b);
      CHECK(j.partial(m) == doctest::Approx(a == b ? 2.0 : 0.0).epsilon(1e-15));
    }
}

TEST_CASE("partial of an index beyond the stored order raises") {
  Jet j = Jet::constant(1.0, 1);
  CHECK_THROWS_AS((void)j.partial(mi({0, 0, 0, 2, 0, 0})), IndexError);
  CHECK_THROWS_AS((void)Jet::constant(1.0, 0).derivative(3), IndexError);
}

TEST_CASE("conformal field x-derivative matches the documented example") {
  auto field = [](const std::array<Jet, 6>& v) {
    return (1.0 + 0.1 * v[0]) * sqrt(v[3] * v[3] + v[4] * v[4] + v[5] * v[5]);
  };
  Vec6 p{0, 0, 0, 0, 0, 1};
  Jet j = evaluate_jet(field, p, 2);
  double fd = oracle::fd_partial(
      [&](const Vec6& q) {
        return (1.0 + 0.1 * q[0]) * std::sqrt(q[3] * q[3] + q[4] * q[4] + q[5] * q[5]);
      },
      p, mi({1, 0, 0, 0, 0, 0}));
  CHECK(j.partial(mi({1, 0, 0, 0, 0, 0})) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(j.partial(mi({1, 0, 0, 0, 0, 0})) == doctest::Approx(fd).epsilon(1e-8));
}

TEST_CASE("singular primitives raise DomainError") {
  auto division = [](const std::array<Jet, 6>& v) { return 1.0 / v[0]; };
  CHECK_THROWS_AS((void)evaluate_jet(division, {0, 0, 0, 0, 0, 1}, 1), DomainError);
  auto root = [](const std::array<Jet, 6>& v) { return sqrt(v[0]); };
  CHECK_THROWS_AS((void)evaluate_jet(root, {-1, 0, 0, 0, 0, 1}, 1), DomainError);
  auto logarithm = [](const std::array<Jet, 6>& v) { return log(v[0]); };
  CHECK_THROWS_AS((void)evaluate_jet(logarithm, {0, 0, 0, 0, 0, 1}, 1), DomainError);
}

TEST_CASE("arithmetic identities hold as truncated series") {
  SplitMix64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Vec6 p;
    for (auto& v : p) v = rng.uniform(0.5, 1.5);
    auto fa = [](const std::array<Jet, 6>& v) {
      return v[0] * v[3] + 2.0 * v[1] - v[4] * v[4] * v[2] + 0.3;
    };
    auto fb = [](const std::array<Jet, 6>& v) { return 1.5 + v[5] * v[5] + 0.2 * v[0] * v[0]; };
    Jet a = evaluate_jet(fa, p, 4);
    Jet b = evaluate_jet(fb, p, 4);

    Jet prod = a * b;
    Jet div_back = prod / b;
    Jet s = sqrt(b);
    Jet s2 = s * s;
    Jet el = exp(log(b));
    Jet trig = sin(a) * sin(a) + cos(a) * cos(a);
    const auto& basis = detail::JetBasis::get();
    for (int i = 0; i < basis.size(); ++i) {
      const MultiIndex& m = basis.index(i);
      CHECK(div_back.coefficient(m) == doctest::Approx(a.coefficient(m)).epsilon(1e-12));
      CHECK(s2.coefficient(m) == doctest::Approx(b.coefficient(m)).epsilon(1e-12));
      CHECK(el.coefficient(m) == doctest::Approx(b.coefficient(m)).epsilon(1e-12));
      CHECK(trig.coefficient(m) ==
            doctest::Approx(m.degree() == 0 ? 1.0 : 0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("jet evaluation is compositional") {
  // f(g(.)) evaluated directly equals the series composition of the two jets
  SplitMix64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    Vec6 p;
    for (auto& v : p) v = rng.uniform(0.2, 1.0);
    auto inner = [](const std::array<Jet, 6>& v) {
      return 1.5 + v[0] * v[3] + 0.3 * v[4] * v[4] + 0.1 * v[1];
    };
    auto composed = [&](const std::array<Jet, 6>& v) { return exp(inner(v)); };
    Jet direct = evaluate_jet(composed, p, 4);
    Jet g = evaluate_jet(inner, p, 4);
    double e = std::exp(g.value());
    Jet via_series = Jet::compose(g, {e, e, e / 2, e / 6, e / 24});
    const auto& basis = detail::JetBasis::get();
    for (int i = 0; i < basis.size(); ++i)
      CHECK(direct.coefficient(basis.index(i)) ==
            doctest::Approx(via_series.coefficient(basis.index(i))).epsilon(1e-12));
  }
}

TEST_CASE("order-0 evaluation agrees exactly with plain evaluation") {
  for (const auto& entry : standard_catalog()) {
    Metric metric(entry.spec);
    SplitMix64 rng(3);
    for (int n = 0; n < 10; ++n) {
      SupportElement se = sample_admissible(entry.spec, rng);
      Jet j = metric.f2_jet(se, 3);
      CHECK(j.value() == metric.f2(se.x, se.y));
    }
  }
}

TEST_CASE("first and second partials match Richardson differences on the catalog") {
  for (const auto& entry : standard_catalog()) {
    Metric metric(entry.spec);
    oracle::Field6 f = oracle::metric_f2_field(metric);
    SplitMix64 rng(1234);
    for (int n = 0; n < 12; ++n) {
      SupportElement se = sample_admissible(entry.spec, rng);
      Vec6 p{se.x[0], se.x[1], se.x[2], se.y[0], se.y[1], se.y[2]};
      Jet j = metric.f2_jet(se, 2);
      for (int a = 0; a < 6; ++a) {
        MultiIndex m1 = MultiIndex::unit(a);
        double fd = oracle::fd_partial(f, p, m1);
        CHECK(std::abs(j.partial(m1) - fd) < 1e-9 + 1e-6 * std::abs(fd));
        for (int b = a; b < 6; ++b) {
          MultiIndex m2 = m1.plus(b);
          if (!m2.valid()) continue;
          double fd2 = oracle::fd_partial(f, p, m2);
          CHECK(std::abs(j.partial(m2) - fd2) < 4e-9 + 1e-6 * std::abs(fd2));
        }
      }
    }
  }
}
