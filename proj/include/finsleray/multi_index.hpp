#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "finsleray/errors.hpp"

namespace finsleray {

// The jet domain is the 6-dimensional (x, y) space: variables 0..2 are the
// base coordinates x1,x2,x3 and 3..5 the fiber coordinates y1,y2,y3.
inline constexpr int kJetVars = 6;
inline constexpr int kJetOrder = 4;   // max total derivative order
inline constexpr int kJetXOrder = 2;  // max derivative order in the x block

// Multi-index of partial-derivative orders per variable.
struct MultiIndex {
  std::array<std::uint8_t, kJetVars> e{};

  static MultiIndex zero() { return MultiIndex{}; }
  static MultiIndex unit(int var) {
    MultiIndex m;
    m.e[static_cast<std::size_t>(var)] = 1;
    return m;
  }

  int degree() const {
    int d = 0;
    for (auto v : e) d += v;
    return d;
  }
  int x_degree() const { return e[0] + e[1] + e[2]; }
  bool valid() const { return degree() <= kJetOrder && x_degree() <= kJetXOrder; }

  // product of per-variable factorials, used to turn Taylor coefficients
  // into raw partial derivatives
  double factorial() const {
    static constexpr double f[5] = {1, 1, 2, 6, 24};
    double r = 1;
    for (auto v : e) r *= f[v];
    return r;
  }

  MultiIndex plus(int var) const {
    MultiIndex m = *this;
    m.e[static_cast<std::size_t>(var)]++;
    return m;
  }

  friend bool operator==(const MultiIndex& a, const MultiIndex& b) { return a.e == b.e; }
};

namespace detail {

// Dense basis of all valid multi-indices, sorted by total degree. A jet of
// order k occupies the first offsets[k+1] slots. Built once, shared.
class JetBasis {
 public:
  static const JetBasis& get() {
    static const JetBasis basis;
    return basis;
  }

  int size() const { return static_cast<int>(indices_.size()); }
  int size_at_order(int order) const { return offsets_[static_cast<std::size_t>(order) + 1]; }
  const MultiIndex& index(int i) const { return indices_[static_cast<std::size_t>(i)]; }
  int degree(int i) const { return degrees_[static_cast<std::size_t>(i)]; }

  // slot of a multi-index, or -1 if outside the basis
  int find(const MultiIndex& m) const {
    int key = 0, p = 1;
    for (int v = 0; v < kJetVars; ++v) {
      if (m.e[static_cast<std::size_t>(v)] > kJetOrder) return -1;
      key += m.e[static_cast<std::size_t>(v)] * p;
      p *= kJetOrder + 1;
    }
    return lookup_[static_cast<std::size_t>(key)];
  }

  struct ProductTerm {
    std::uint16_t out, a, b;
  };
  // all (out, a, b) with index[a] + index[b] == index[out], grouped by
  // ascending degree(out); products up to order k use terms() prefix
  // [0, product_offsets(k))
  const std::vector<ProductTerm>& terms() const { return terms_; }
  int product_end(int order) const { return product_end_[static_cast<std::size_t>(order)]; }

  // derivative shift: slot of index(i) + unit(var), or -1; and the factor
  // (e_var + 1) applied to the source coefficient
  int shift(int i, int var) const { return shift_[static_cast<std::size_t>(i * kJetVars + var)]; }
  double shift_factor(int i, int var) const {
    return shift_factor_[static_cast<std::size_t>(i * kJetVars + var)];
  }

 private:
  JetBasis() {
    for (int d = 0; d <= kJetOrder; ++d) {
      offsets_[static_cast<std::size_t>(d)] = static_cast<int>(indices_.size());
      enumerate(d);
      offsets_[static_cast<std::size_t>(d) + 1] = static_cast<int>(indices_.size());
    }
    int nkeys = 1;
    for (int v = 0; v < kJetVars; ++v) nkeys *= kJetOrder + 1;
    lookup_.assign(static_cast<std::size_t>(nkeys), -1);
    for (int i = 0; i < size(); ++i) {
      int key = 0, p = 1;
      for (int v = 0; v < kJetVars; ++v) {
        key += indices_[static_cast<std::size_t>(i)].e[static_cast<std::size_t>(v)] * p;
        p *= kJetOrder + 1;
      }
      lookup_[static_cast<std::size_t>(key)] = i;
      degrees_.push_back(indices_[static_cast<std::size_t>(i)].degree());
    }
    build_products();
    build_shifts();
  }

  void enumerate(int degree) {
    MultiIndex m;
    enumerate_rec(m, 0, degree);
  }
  void enumerate_rec(MultiIndex& m, int var, int remaining) {
    if (var == kJetVars - 1) {
      m.e[static_cast<std::size_t>(var)] = static_cast<std::uint8_t>(remaining);
      if (m.valid()) indices_.push_back(m);
      m.e[static_cast<std::size_t>(var)] = 0;
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      m.e[static_cast<std::size_t>(var)] = static_cast<std::uint8_t>(k);
      enumerate_rec(m, var + 1, remaining - k);
    }
    m.e[static_cast<std::size_t>(var)] = 0;
  }

  void build_products() {
    for (int d = 0; d <= kJetOrder; ++d) {
      for (int out = offsets_[static_cast<std::size_t>(d)];
           out < offsets_[static_cast<std::size_t>(d) + 1]; ++out) {
        const MultiIndex& g = indices_[static_cast<std::size_t>(out)];
        // all splittings a + b = g
        std::array<std::uint8_t, kJetVars> a{};
        split_rec(g, a, 0, out);
      }
      product_end_[static_cast<std::size_t>(d)] = static_cast<int>(terms_.size());
    }
  }
  void split_rec(const MultiIndex& g, std::array<std::uint8_t, kJetVars>& a, int var, int out) {
    if (var == kJetVars) {
      MultiIndex ma, mb;
      ma.e = a;
      for (int v = 0; v < kJetVars; ++v)
        mb.e[static_cast<std::size_t>(v)] =
            static_cast<std::uint8_t>(g.e[static_cast<std::size_t>(v)] - a[static_cast<std::size_t>(v)]);
      int ia = find(ma), ib = find(mb);
      if (ia >= 0 && ib >= 0)
        terms_.push_back({static_cast<std::uint16_t>(out), static_cast<std::uint16_t>(ia),
                          static_cast<std::uint16_t>(ib)});
      return;
    }
    for (int k = 0; k <= g.e[static_cast<std::size_t>(var)]; ++k) {
      a[static_cast<std::size_t>(var)] = static_cast<std::uint8_t>(k);
      split_rec(g, a, var + 1, out);
    }
    a[static_cast<std::size_t>(var)] = 0;
  }

  void build_shifts() {
    shift_.assign(static_cast<std::size_t>(size() * kJetVars), -1);
    shift_factor_.assign(static_cast<std::size_t>(size() * kJetVars), 0.0);
    for (int i = 0; i < size(); ++i) {
      for (int v = 0; v < kJetVars; ++v) {
        MultiIndex up = indices_[static_cast<std::size_t>(i)].plus(v);
        if (!up.valid()) continue;
        int j = find(up);
        if (j < 0) continue;
        shift_[static_cast<std::size_t>(i * kJetVars + v)] = j;
        shift_factor_[static_cast<std::size_t>(i * kJetVars + v)] =
            up.e[static_cast<std::size_t>(v)];
      }
    }
  }

  std::vector<MultiIndex> indices_;
  std::vector<int> degrees_;
  std::array<int, kJetOrder + 2> offsets_{};
  std::vector<int> lookup_;
  std::vector<ProductTerm> terms_;
  std::array<int, kJetOrder + 1> product_end_{};
  std::vector<int> shift_;
  std::vector<double> shift_factor_;
};

}  // namespace detail
}  // namespace finsleray
