#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <string>

#include "finsleray/multi_index.hpp"

namespace finsleray {

namespace detail {
constexpr int count_basis() {
  int n = 0;
  for (int e0 = 0; e0 <= kJetOrder; ++e0)
    for (int e1 = 0; e1 <= kJetOrder; ++e1)
      for (int e2 = 0; e2 <= kJetOrder; ++e2)
        for (int e3 = 0; e3 <= kJetOrder; ++e3)
          for (int e4 = 0; e4 <= kJetOrder; ++e4)
            for (int e5 = 0; e5 <= kJetOrder; ++e5) {
              int deg = e0 + e1 + e2 + e3 + e4 + e5;
              int xdeg = e0 + e1 + e2;
              if (deg <= kJetOrder && xdeg <= kJetXOrder) ++n;
            }
  return n;
}
}  // namespace detail

inline constexpr int kJetSize = detail::count_basis();

// Truncated multivariate Taylor expansion of a scalar at a point of the
// (x, y) domain. Coefficients are Taylor coefficients (partials divided by
// multi-index factorials). `order()` is the guaranteed truncation order:
// coefficients of higher degree are stored as exact zeros, and arithmetic
// propagates the min of the operand orders. Exact inputs (constants,
// coordinates) carry the full order so they never degrade a product.
class Jet {
 public:
  Jet() : order_(kJetOrder) { c_.fill(0.0); }

  static Jet constant(double v, int order = kJetOrder) {
    check_order(order);
    Jet j;
    j.order_ = order;
    j.c_[0] = v;
    return j;
  }

  // the coordinate function of variable `var` (0..2 -> x, 3..5 -> y)
  static Jet variable(int var, double value, int order = kJetOrder) {
    check_order(order);
    Jet j;
    j.order_ = order;
    j.c_[0] = value;
    if (order >= 1) {
      int slot = detail::JetBasis::get().find(MultiIndex::unit(var));
      j.c_[static_cast<std::size_t>(slot)] = 1.0;
    }
    return j;
  }

  int order() const { return order_; }
  double value() const { return c_[0]; }

  double coefficient(const MultiIndex& m) const {
    int i = detail::JetBasis::get().find(m);
    if (i < 0 || m.degree() > order_)
      throw IndexError("multi-index exceeds stored jet order");
    return c_[static_cast<std::size_t>(i)];
  }

  // raw partial derivative = coefficient * factorial
  double partial(const MultiIndex& m) const { return coefficient(m) * m.factorial(); }

  // partial derivative as a jet of one order less
  Jet derivative(int var) const {
    if (order_ <= 0) throw IndexError("cannot differentiate an order-0 jet");
    const auto& basis = detail::JetBasis::get();
    Jet r;
    r.order_ = order_ - 1;
    int n = basis.size_at_order(r.order_);
    for (int i = 0; i < n; ++i) {
      int src = basis.shift(i, var);
      if (src >= 0) r.c_[static_cast<std::size_t>(i)] = basis.shift_factor(i, var) * c_[static_cast<std::size_t>(src)];
    }
    return r;
  }

  Jet truncated(int order) const {
    Jet r = *this;
    if (order < r.order_) {
      r.order_ = order;
      const auto& basis = detail::JetBasis::get();
      std::fill(r.c_.begin() + basis.size_at_order(order), r.c_.end(), 0.0);
    }
    return r;
  }

  Jet& operator+=(const Jet& o) {
    order_ = std::min(order_, o.order_);
    for (int i = 0; i < kJetSize; ++i) c_[static_cast<std::size_t>(i)] += o.c_[static_cast<std::size_t>(i)];
    clear_tail();
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    order_ = std::min(order_, o.order_);
    for (int i = 0; i < kJetSize; ++i) c_[static_cast<std::size_t>(i)] -= o.c_[static_cast<std::size_t>(i)];
    clear_tail();
    return *this;
  }
  Jet& operator*=(double k) {
    for (auto& v : c_) v *= k;
    return *this;
  }
  Jet& operator+=(double k) {
    c_[0] += k;
    return *this;
  }
  Jet& operator-=(double k) {
    c_[0] -= k;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, double k) { return a += k; }
  friend Jet operator+(double k, Jet a) { return a += k; }
  friend Jet operator-(Jet a, double k) { return a -= k; }
  friend Jet operator-(double k, const Jet& a) {
    Jet r = -a;
    r.c_[0] += k;
    return r;
  }
  friend Jet operator*(Jet a, double k) { return a *= k; }
  friend Jet operator*(double k, Jet a) { return a *= k; }
  friend Jet operator/(Jet a, double k) { return a *= (1.0 / k); }
  friend Jet operator-(const Jet& a) {
    Jet r = a;
    for (auto& v : r.c_) v = -v;
    return r;
  }

  friend Jet operator*(const Jet& a, const Jet& b) {
    const auto& basis = detail::JetBasis::get();
    Jet r;
    r.order_ = std::min(a.order_, b.order_);
    const auto& terms = basis.terms();
    int end = basis.product_end(r.order_);
    for (int t = 0; t < end; ++t) {
      const auto& pt = terms[static_cast<std::size_t>(t)];
      r.c_[pt.out] += a.c_[pt.a] * b.c_[pt.b];
    }
    return r;
  }

  friend Jet operator/(const Jet& a, const Jet& b) {
    Jet r = a * reciprocal(b);
    r.c_[0] = a.c_[0] / b.c_[0];  // order-0 slot matches plain division exactly
    return r;
  }
  friend Jet operator/(double k, const Jet& b) {
    Jet r = reciprocal(b) * k;
    r.c_[0] = k / b.c_[0];
    return r;
  }

  // f applied through its Taylor series: series[k] = f^(k)(value)/k!
  static Jet compose(const Jet& u, const std::array<double, kJetOrder + 1>& series) {
    Jet w = u;
    w.c_[0] = 0.0;  // nilpotent part
    Jet r = Jet::constant(series[0], u.order_);
    Jet wp = Jet::constant(1.0, u.order_);
    for (int k = 1; k <= u.order_; ++k) {
      wp = wp * w;
      Jet term = wp;
      term *= series[static_cast<std::size_t>(k)];
      r += term;
    }
    return r;
  }

  friend Jet reciprocal(const Jet& b) {
    double v = b.value();
    if (v == 0.0) throw DomainError("division by zero in jet arithmetic");
    std::array<double, kJetOrder + 1> s{};
    double p = 1.0 / v;
    for (int k = 0; k <= kJetOrder; ++k) {
      s[static_cast<std::size_t>(k)] = p;  // (-1)^k / v^{k+1}
      p *= -1.0 / v;
    }
    return compose(b, s);
  }

 private:
  static void check_order(int order) {
    if (order < 0 || order > kJetOrder)
      throw IndexError("jet order must lie in [0, " + std::to_string(kJetOrder) + "]");
  }

  void clear_tail() {
    const auto& basis = detail::JetBasis::get();
    std::fill(c_.begin() + basis.size_at_order(order_), c_.end(), 0.0);
  }

  std::array<double, kJetSize> c_;
  int order_;
};

inline Jet sqrt(const Jet& u) {
  double v = u.value();
  if (v <= 0.0) throw DomainError("sqrt of non-positive value in jet arithmetic");
  double r = std::sqrt(v);
  // series of sqrt at v: r, r/(2v), -r/(8v^2), r/(16v^3), -5r/(128v^4)
  std::array<double, kJetOrder + 1> s{};
  s[0] = r;
  s[1] = 0.5 * r / v;
  s[2] = -0.125 * r / (v * v);
  s[3] = 0.0625 * r / (v * v * v);
  s[4] = -5.0 / 128.0 * r / (v * v * v * v);
  return Jet::compose(u, s);
}

inline Jet exp(const Jet& u) {
  double e = std::exp(u.value());
  std::array<double, kJetOrder + 1> s{e, e, e / 2, e / 6, e / 24};
  return Jet::compose(u, s);
}

inline Jet log(const Jet& u) {
  double v = u.value();
  if (v <= 0.0) throw DomainError("log of non-positive value in jet arithmetic");
  std::array<double, kJetOrder + 1> s{};
  s[0] = std::log(v);
  double p = 1.0 / v;
  for (int k = 1; k <= kJetOrder; ++k) {
    s[static_cast<std::size_t>(k)] = (k % 2 ? p : -p) / k;  // (-1)^{k-1}/(k v^k)
    p /= v;
  }
  return Jet::compose(u, s);
}

inline Jet sin(const Jet& u) {
  double sv = std::sin(u.value()), cv = std::cos(u.value());
  std::array<double, kJetOrder + 1> s{sv, cv, -sv / 2, -cv / 6, sv / 24};
  return Jet::compose(u, s);
}

inline Jet cos(const Jet& u) {
  double sv = std::sin(u.value()), cv = std::cos(u.value());
  std::array<double, kJetOrder + 1> s{cv, -sv, -cv / 2, sv / 6, cv / 24};
  return Jet::compose(u, s);
}

inline Jet pow(const Jet& u, int n) {
  if (n == 0) return Jet::constant(1.0, u.order());
  bool neg = n < 0;
  unsigned long m = neg ? static_cast<unsigned long>(-(long)n) : static_cast<unsigned long>(n);
  Jet base = u;
  Jet r = Jet::constant(1.0, u.order());
  while (m) {
    if (m & 1u) r = r * base;
    base = base * base;
    m >>= 1;
  }
  return neg ? reciprocal(r) : r;
}

inline Jet pow(const Jet& u, double a) {
  double ri = std::round(a);
  if (ri == a && std::abs(a) <= 32) return pow(u, static_cast<int>(ri));
  double v = u.value();
  if (v <= 0.0) throw DomainError("pow of non-positive base with non-integer exponent");
  // s[k] = a(a-1)...(a-k+1) v^{a-k} / k!
  std::array<double, kJetOrder + 1> s{};
  double coeff = std::pow(v, a);
  double fact = 1.0;
  for (int k = 0; k <= kJetOrder; ++k) {
    s[static_cast<std::size_t>(k)] = coeff / fact;
    coeff *= (a - k) / v;
    fact *= (k + 1);
  }
  return Jet::compose(u, s);
}

// evaluate a callable field on the jet lift of `point` to the given order
template <class Field>
Jet evaluate_jet(Field&& field, const std::array<double, kJetVars>& point, int order) {
  std::array<Jet, kJetVars> vars;
  for (int v = 0; v < kJetVars; ++v)
    vars[static_cast<std::size_t>(v)] = Jet::variable(v, point[static_cast<std::size_t>(v)], order);
  return field(vars);
}

}  // namespace finsleray
