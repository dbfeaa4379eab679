#pragma once

#include "airy/polynomial.hpp"
#include "airy/rational.hpp"

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace airy {

enum class IndexRole { VariableAndDerivative, VariableOnly, DerivativeOnly };

// Index window and role assignment for one algebra of differential operators.
// Variables and derivatives share the index range [0, max_index]; an index can
// be restricted to appear only as a variable or only as a derivative.
struct AlgebraConfig {
  long max_index = 0;
  std::set<long> variable_only;
  std::set<long> derivative_only;

  IndexRole role(long i) const {
    if (variable_only.count(i)) return IndexRole::VariableOnly;
    if (derivative_only.count(i)) return IndexRole::DerivativeOnly;
    return IndexRole::VariableAndDerivative;
  }

  bool allows_variable(long i) const {
    return i >= 0 && i <= max_index && !derivative_only.count(i);
  }
  bool allows_derivative(long i) const {
    return i >= 0 && i <= max_index && !variable_only.count(i);
  }

  bool operator==(const AlgebraConfig& o) const {
    return max_index == o.max_index && variable_only == o.variable_only &&
           derivative_only == o.derivative_only;
  }
};

using AlgebraConfigPtr = std::shared_ptr<const AlgebraConfig>;

inline AlgebraConfigPtr make_config(long max_index, std::set<long> variable_only = {},
                                    std::set<long> derivative_only = {}) {
  auto c = std::make_shared<AlgebraConfig>();
  c->max_index = max_index;
  c->variable_only = std::move(variable_only);
  c->derivative_only = std::move(derivative_only);
  return c;
}

// Normal-ordered monomial x^V d^D (variables to the left of derivatives).
struct WeylMonomial {
  Monomial x;
  Monomial d;

  long degree() const { return x.degree() + d.degree(); }
  bool is_polynomial() const { return d.exps.empty(); }

  // Mode-index sum under the boson dictionary: derivatives count +index,
  // variables count -index.
  long index_sum() const { return d.index_weight() - x.index_weight(); }

  bool operator==(const WeylMonomial& o) const { return x == o.x && d == o.d; }
  bool operator<(const WeylMonomial& o) const {
    if (!(x == o.x)) return x < o.x;
    return d < o.d;
  }
};

// Element of the hbar-completed Rees Weyl algebra, truncated at order K.
// Every monomial stored at hbar order n has Bernstein degree <= n; orders
// beyond K are unknown rather than zero.
class WeylOperator {
 public:
  using TermMap = std::map<WeylMonomial, Rational>;

  WeylOperator() = default;
  WeylOperator(AlgebraConfigPtr config, int truncation)
      : config_(std::move(config)), trunc_(truncation) {}

  const AlgebraConfigPtr& config() const { return config_; }
  int truncation() const { return trunc_; }
  const std::map<int, TermMap>& orders() const { return orders_; }
  bool is_zero() const { return orders_.empty(); }

  const TermMap& order(int n) const {
    static const TermMap empty;
    auto it = orders_.find(n);
    return it == orders_.end() ? empty : it->second;
  }

  void add_term(int n, const WeylMonomial& m, const Rational& c) {
    if (c == 0 || n > trunc_) return;
    validate_term(n, m);
    auto& level = orders_[n];
    auto [it, inserted] = level.try_emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0) level.erase(it);
    }
    if (level.empty()) orders_.erase(n);
  }

  WeylOperator& operator+=(const WeylOperator& o) {
    require_same_config(o);
    trunc_ = std::min(trunc_, o.trunc_);
    prune_above(trunc_);
    for (auto& [n, terms] : o.orders_) {
      if (n > trunc_) continue;
      for (auto& [m, c] : terms) add_term(n, m, c);
    }
    return *this;
  }

  WeylOperator& operator-=(const WeylOperator& o) {
    require_same_config(o);
    trunc_ = std::min(trunc_, o.trunc_);
    prune_above(trunc_);
    for (auto& [n, terms] : o.orders_) {
      if (n > trunc_) continue;
      for (auto& [m, c] : terms) add_term(n, m, -c);
    }
    return *this;
  }

  WeylOperator& operator*=(const Rational& c) {
    if (c == 0) {
      orders_.clear();
      return *this;
    }
    for (auto& [n, terms] : orders_)
      for (auto& [m, v] : terms) v *= c;
    return *this;
  }

  friend WeylOperator operator+(WeylOperator a, const WeylOperator& b) { return a += b; }
  friend WeylOperator operator-(WeylOperator a, const WeylOperator& b) { return a -= b; }
  friend WeylOperator operator*(WeylOperator a, const Rational& c) { return a *= c; }

  bool operator==(const WeylOperator& o) const { return orders_ == o.orders_; }

  // Multiplies hbar orders by one global shift; s < 0 requires the low orders
  // to be absent (exact division by hbar^-s).
  WeylOperator shift_orders(int s) const {
    WeylOperator r(config_, trunc_ + s);
    for (auto& [n, terms] : orders_) {
      if (n + s < 0) throw error("hbar order would become negative in shift");
      for (auto& [m, c] : terms) r.add_term(n + s, m, c);
    }
    return r;
  }

  WeylOperator truncated(int k) const {
    WeylOperator r(config_, k);
    for (auto& [n, terms] : orders_) {
      if (n > k) break;
      for (auto& [m, c] : terms) r.add_term(n, m, c);
    }
    return r;
  }

  void require_same_config(const WeylOperator& o) const {
    if (config_ && o.config_ && !(*config_ == *o.config_))
      throw config_mismatch_error("operators over different algebra configurations");
  }

 private:
  void validate_term(int n, const WeylMonomial& m) const {
    if (m.degree() > n)
      throw error("Bernstein degree exceeds hbar order");
    if (!config_) return;
    for (auto& [i, e] : m.x.exps)
      if (!config_->allows_variable(i))
        throw window_overflow_error("variable index " + std::to_string(i) +
                                    " outside algebra window");
    for (auto& [i, e] : m.d.exps)
      if (!config_->allows_derivative(i))
        throw window_overflow_error("derivative index " + std::to_string(i) +
                                    " outside algebra window");
  }

  void prune_above(int k) {
    for (auto it = orders_.begin(); it != orders_.end();)
      it = (it->first > k) ? orders_.erase(it) : std::next(it);
  }

  AlgebraConfigPtr config_;
  int trunc_ = 0;
  std::map<int, TermMap> orders_;
};

inline WeylOperator weyl_term(const AlgebraConfigPtr& cfg, int trunc, int n,
                              const WeylMonomial& m, const Rational& c) {
  WeylOperator r(cfg, trunc);
  r.add_term(n, m, c);
  return r;
}

// hbar d_a as an operator.
inline WeylOperator hbar_d(const AlgebraConfigPtr& cfg, int trunc, long a) {
  return weyl_term(cfg, trunc, 1, WeylMonomial{Monomial::one(), Monomial::var(a)}, 1);
}

// hbar x_a as an operator.
inline WeylOperator hbar_x(const AlgebraConfigPtr& cfg, int trunc, long a) {
  return weyl_term(cfg, trunc, 1, WeylMonomial{Monomial::var(a), Monomial::one()}, 1);
}

namespace detail {

// d^b x^c = sum_k C(b,k) C(c,k) k! x^(c-k) d^(b-k), applied per shared index.
inline void reorder_products(const Monomial& dleft, const Monomial& xright,
                             std::vector<std::pair<Rational, std::pair<Monomial, Monomial>>>& out) {
  out.clear();
  out.push_back({Rational(1), {xright, dleft}});
  for (auto& [idx, b] : dleft.exps) {
    long c = xright.exponent_of(idx);
    if (c == 0) continue;
    std::vector<std::pair<Rational, std::pair<Monomial, Monomial>>> next;
    for (auto& [coef, xd] : out) {
      long bb = xd.second.exponent_of(idx);
      long cc = xd.first.exponent_of(idx);
      long kmax = std::min(bb, cc);
      for (long k = 0; k <= kmax; ++k) {
        Rational factor = Rational(binomial(bb, k) * binomial(cc, k) * factorial(k));
        Monomial nx, nd;
        for (auto& [i, e] : xd.first.exps) {
          long ne = (i == idx) ? e - k : e;
          if (ne > 0) nx.exps.push_back({i, ne});
        }
        for (auto& [i, e] : xd.second.exps) {
          long ne = (i == idx) ? e - k : e;
          if (ne > 0) nd.exps.push_back({i, ne});
        }
        next.push_back({coef * factor, {nx, nd}});
      }
    }
    out.swap(next);
  }
}

}  // namespace detail

// Normal-ordered product modulo hbar^(K+1), K = min of the truncations.
// Reordering a derivative past a matching variable keeps the hbar order and
// drops the Bernstein degree by two, which is the Rees grading of the
// commutation relation.
inline WeylOperator multiply(const WeylOperator& P, const WeylOperator& Q) {
  P.require_same_config(Q);
  int k = std::min(P.truncation(), Q.truncation());
  WeylOperator r(P.config() ? P.config() : Q.config(), k);
  std::vector<std::pair<Rational, std::pair<Monomial, Monomial>>> middle;
  for (auto& [np, tp] : P.orders()) {
    if (np > k) break;
    for (auto& [nq, tq] : Q.orders()) {
      int n = np + nq;
      if (n > k) break;
      for (auto& [mp, cp] : tp)
        for (auto& [mq, cq] : tq) {
          detail::reorder_products(mp.d, mq.x, middle);
          for (auto& [coef, xd] : middle)
            r.add_term(n, WeylMonomial{mp.x.times(xd.first), xd.second.times(mq.d)},
                       cp * cq * coef);
        }
    }
  }
  return r;
}

inline WeylOperator commutator(const WeylOperator& P, const WeylOperator& Q) {
  return multiply(P, Q) - multiply(Q, P);
}

// Max total degree over the monomials of one hbar level; empty for zero.
inline std::optional<long> bernstein_degree(const WeylOperator::TermMap& terms) {
  std::optional<long> d;
  for (auto& [m, c] : terms) d = std::max(d.value_or(-1), m.degree());
  return d;
}

// Transvection data: hbar d_a -> hbar d_a + sum_n hbar^n d_a(q^(n+1) + s^(n+1)),
// with q^(n+1) of degree <= n+1 vanishing at 0 and s^(n+1) linear in the
// derivative-only-paired variables. Stable when nothing is present below n = 2.
struct Transvection {
  std::map<int, Polynomial> q;        // n -> q^(n+1)
  std::map<int, Polynomial> s_linear; // n -> s^(n+1)

  bool stable() const {
    for (auto& [n, p] : q)
      if (n < 2 && !p.is_zero()) return false;
    for (auto& [n, p] : s_linear)
      if (n < 2 && !p.is_zero()) return false;
    return true;
  }

  void validate() const {
    for (auto& [n, p] : q) {
      if (p.degree() > n + 1) throw error("transvection polynomial exceeds degree bound");
      if (p.constant_term() != 0) throw error("transvection polynomial has constant term");
    }
    for (auto& [n, p] : s_linear)
      if (p.degree() > 1) throw error("transvection s-part is not linear");
  }

  // Full log-of-Z combination at superscript n+1.
  Polynomial combined(int n) const {
    Polynomial r;
    auto it = q.find(n);
    if (it != q.end()) r += it->second;
    it = s_linear.find(n);
    if (it != s_linear.end()) r += it->second;
    return r;
  }
};

// Image of hbar d_a under the transvection (forward: +, inverse: -).
inline WeylOperator transvection_image(const AlgebraConfigPtr& cfg, int trunc, long a,
                                       const Transvection& t, bool forward) {
  WeylOperator r = hbar_d(cfg, trunc, a);
  auto add_grad = [&](const std::map<int, Polynomial>& part) {
    for (auto& [n, poly] : part) {
      if (n > trunc) continue;
      Polynomial g = poly.derivative(a);
      if (!forward) g *= Rational(-1);
      for (auto& [m, c] : g.terms()) r.add_term(n, WeylMonomial{m, Monomial::one()}, c);
    }
  };
  add_grad(t.q);
  add_grad(t.s_linear);
  return r;
}

// Substitutes every derivative factor by its transvection image. Variables
// and hbar are fixed, so a term hbar^n x^V d_(a1)...d_(aj) maps to
// hbar^(n-j) x^V H(a1)...H(aj) as an ordered operator product.
inline WeylOperator apply_transvection(const WeylOperator& P, const Transvection& t,
                                       bool forward) {
  t.validate();
  WeylOperator result(P.config(), P.truncation());
  std::map<long, WeylOperator> images;
  auto image = [&](long a) -> const WeylOperator& {
    auto it = images.find(a);
    if (it == images.end())
      it = images.emplace(a, transvection_image(P.config(), P.truncation(), a, t, forward)).first;
    return it->second;
  };
  for (auto& [n, terms] : P.orders()) {
    for (auto& [m, c] : terms) {
      long j = m.d.degree();
      WeylOperator acc =
          weyl_term(P.config(), P.truncation(), static_cast<int>(n - j),
                    WeylMonomial{m.x, Monomial::one()}, c);
      for (auto& [idx, e] : m.d.exps)
        for (long rep = 0; rep < e; ++rep) acc = multiply(acc, image(idx));
      result += acc;
    }
  }
  return result;
}

// (P e^S)/e^S as a truncated series of polynomials: substitute each
// derivative d_a by (d_a + d_a S) and evaluate on 1.
inline PolySeries act_on_exponential(const WeylOperator& P, const ExponentData& S) {
  S.validate();
  if (!S.stable()) throw error("act_on_exponential requires stable exponent data");
  int K = std::min(P.truncation(), S.truncation());
  PolySeries result(K);
  std::map<long, PolySeries> grad_cache;
  auto grad = [&](long a) -> const PolySeries& {
    auto it = grad_cache.find(a);
    if (it == grad_cache.end()) {
      PolySeries g(K);
      for (auto& [j, p] : S.log_terms.orders()) g.add(static_cast<int>(j), p.derivative(a));
      it = grad_cache.emplace(a, std::move(g)).first;
    }
    return it->second;
  };
  for (auto& [n, terms] : P.orders()) {
    if (n > K) break;
    for (auto& [m, c] : terms) {
      PolySeries acc(K - static_cast<int>(n));
      acc.add(0, Polynomial(1));
      // Rightmost derivative acts first.
      std::vector<long> ds;
      for (auto& [idx, e] : m.d.exps)
        for (long rep = 0; rep < e; ++rep) ds.push_back(idx);
      for (auto it = ds.rbegin(); it != ds.rend(); ++it) {
        PolySeries next(acc.truncation());
        for (auto& [j, p] : acc.orders()) next.add(j, p.derivative(*it));
        next += grad(*it) * acc;
        acc = std::move(next);
      }
      Polynomial xpart(c, m.x);
      for (auto& [j, p] : acc.orders()) result.add(static_cast<int>(n) + j, xpart * p);
    }
  }
  return result;
}

}  // namespace airy
