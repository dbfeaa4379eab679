#pragma once

#include "airy/rational.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace airy {

// Sparse exponent vector, sorted by index, exponents > 0.
struct Monomial {
  std::vector<std::pair<long, long>> exps;

  static Monomial one() { return {}; }

  static Monomial var(long index, long exp = 1) {
    Monomial m;
    if (exp > 0) m.exps.push_back({index, exp});
    return m;
  }

  long degree() const {
    long d = 0;
    for (auto& [i, e] : exps) d += e;
    return d;
  }

  // Sum of index * exponent.
  long index_weight() const {
    long w = 0;
    for (auto& [i, e] : exps) w += i * e;
    return w;
  }

  long exponent_of(long index) const {
    for (auto& [i, e] : exps)
      if (i == index) return e;
    return 0;
  }

  long max_index() const {
    long m = -1;
    for (auto& [i, e] : exps) m = std::max(m, i);
    return m;
  }

  Monomial times(const Monomial& o) const {
    Monomial r;
    std::size_t a = 0, b = 0;
    while (a < exps.size() || b < o.exps.size()) {
      if (b == o.exps.size() || (a < exps.size() && exps[a].first < o.exps[b].first)) {
        r.exps.push_back(exps[a++]);
      } else if (a == exps.size() || o.exps[b].first < exps[a].first) {
        r.exps.push_back(o.exps[b++]);
      } else {
        r.exps.push_back({exps[a].first, exps[a].second + o.exps[b].second});
        ++a;
        ++b;
      }
    }
    return r;
  }

  bool operator==(const Monomial& o) const { return exps == o.exps; }
  bool operator<(const Monomial& o) const { return exps < o.exps; }
};

// Sparse multivariate polynomial with exact rational coefficients.
class Polynomial {
 public:
  using TermMap = std::map<Monomial, Rational>;

  Polynomial() = default;
  explicit Polynomial(const Rational& c) {
    if (c != 0) terms_[Monomial::one()] = c;
  }
  Polynomial(const Rational& c, const Monomial& m) {
    if (c != 0) terms_[m] = c;
  }

  static Polynomial variable(long index) { return Polynomial(1, Monomial::var(index)); }

  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  long degree() const {
    long d = -1;
    for (auto& [m, c] : terms_) d = std::max(d, m.degree());
    return d;
  }

  long max_index() const {
    long r = -1;
    for (auto& [m, c] : terms_) r = std::max(r, m.max_index());
    return r;
  }

  Rational coefficient(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? Rational(0) : it->second;
  }

  Rational constant_term() const { return coefficient(Monomial::one()); }

  void add_term(const Monomial& m, const Rational& c) {
    if (c == 0) return;
    auto [it, inserted] = terms_.try_emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0) terms_.erase(it);
    }
  }

  Polynomial& operator+=(const Polynomial& o) {
    for (auto& [m, c] : o.terms_) add_term(m, c);
    return *this;
  }

  Polynomial& operator-=(const Polynomial& o) {
    for (auto& [m, c] : o.terms_) add_term(m, -c);
    return *this;
  }

  Polynomial& operator*=(const Rational& c) {
    if (c == 0) {
      terms_.clear();
      return *this;
    }
    for (auto& [m, v] : terms_) v *= c;
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, const Rational& c) { return a *= c; }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    Polynomial r;
    for (auto& [ma, ca] : a.terms_)
      for (auto& [mb, cb] : b.terms_) r.add_term(ma.times(mb), ca * cb);
    return r;
  }

  bool operator==(const Polynomial& o) const { return terms_ == o.terms_; }

  Polynomial derivative(long index) const {
    Polynomial r;
    for (auto& [m, c] : terms_) {
      long e = m.exponent_of(index);
      if (e == 0) continue;
      Monomial d;
      for (auto& [i, x] : m.exps) {
        if (i == index) {
          if (x > 1) d.exps.push_back({i, x - 1});
        } else {
          d.exps.push_back({i, x});
        }
      }
      r.add_term(d, c * e);
    }
    return r;
  }

  // Part of total degree d.
  Polynomial homogeneous_part(long d) const {
    Polynomial r;
    for (auto& [m, c] : terms_)
      if (m.degree() == d) r.terms_[m] = c;
    return r;
  }

 private:
  TermMap terms_;
};

// hbar-graded polynomial series truncated at order K: sum_j hbar^j p_j(x).
class PolySeries {
 public:
  PolySeries() = default;
  explicit PolySeries(int truncation) : trunc_(truncation) {}

  int truncation() const { return trunc_; }
  const std::map<int, Polynomial>& orders() const { return orders_; }
  bool is_zero() const { return orders_.empty(); }

  const Polynomial& at(int j) const {
    static const Polynomial zero;
    auto it = orders_.find(j);
    return it == orders_.end() ? zero : it->second;
  }

  void add(int j, const Polynomial& p) {
    if (j > trunc_ || p.is_zero()) return;
    auto [it, inserted] = orders_.try_emplace(j, p);
    if (!inserted) {
      it->second += p;
      if (it->second.is_zero()) orders_.erase(it);
    }
  }

  PolySeries& operator+=(const PolySeries& o) {
    for (auto& [j, p] : o.orders_) add(j, p);
    return *this;
  }

  PolySeries& operator-=(const PolySeries& o) {
    for (auto& [j, p] : o.orders_) {
      Polynomial q = p;
      q *= Rational(-1);
      add(j, q);
    }
    return *this;
  }

  friend PolySeries operator*(const PolySeries& a, const PolySeries& b) {
    PolySeries r(std::min(a.trunc_, b.trunc_));
    for (auto& [i, p] : a.orders_)
      for (auto& [j, q] : b.orders_) {
        if (i + j > r.trunc_) continue;
        r.add(i + j, p * q);
      }
    return r;
  }

  bool operator==(const PolySeries& o) const { return orders_ == o.orders_; }

  // Same coefficients declared valid to a different truncation order.
  PolySeries with_truncation(int t) const {
    PolySeries r(t);
    for (auto& [j, p] : orders_)
      if (j <= t) r.orders_[j] = p;
    return r;
  }

 private:
  int trunc_ = 0;
  std::map<int, Polynomial> orders_;
};

// Log of a partition-function candidate: series whose order-j part has
// degree <= j + 2 and no constant term. Orders >= 1 make the data stable.
struct ExponentData {
  PolySeries log_terms;

  explicit ExponentData(int truncation) : log_terms(truncation) {}
  explicit ExponentData(PolySeries s) : log_terms(std::move(s)) { validate(); }

  int truncation() const { return log_terms.truncation(); }

  bool stable() const {
    for (auto& [j, p] : log_terms.orders())
      if (j < 1) return false;
    return true;
  }

  void validate() const {
    for (auto& [j, p] : log_terms.orders()) {
      if (j < -1) throw error("exponent data below hbar order -1");
      if (p.degree() > j + 2) throw error("exponent data degree exceeds order + 2");
      if (p.constant_term() != 0) throw error("exponent data has a constant term");
    }
  }
};

}  // namespace airy
