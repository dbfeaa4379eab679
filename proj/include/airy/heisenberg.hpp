#pragma once

#include "airy/weyl.hpp"

#include <algorithm>
#include <map>
#include <vector>

namespace airy {

// Interpretation of the zero mode when mapping mode polynomials into the Weyl
// algebra: kappa treats J_0 as a variable, rho as a derivative. The choice
// fixes the sign of [J_0, Jt_0] for the conjugate zero mode Jt_0.
enum class ZeroModeScenario { ZeroModeAsVariable, ZeroModeAsDerivative };

inline int zero_mode_bracket_sign(ZeroModeScenario s) {
  // [J_0, Jt_0] = -1 for kappa, +1 for rho.
  return s == ZeroModeScenario::ZeroModeAsVariable ? -1 : +1;
}

// Normal-ordered word in the modes J_m plus the conjugate zero mode, sorted
// nondecreasing with Jt_0 placed immediately after J_0.
struct ModeMonomial {
  std::vector<long> modes;  // sorted nondecreasing
  long tilde = 0;           // conjugate zero mode multiplicity

  long degree() const { return static_cast<long>(modes.size()) + tilde; }

  long index_sum() const {
    long s = 0;
    for (long m : modes) s += m;
    return s;
  }

  long count_of(long mode) const {
    auto [lo, hi] = std::equal_range(modes.begin(), modes.end(), mode);
    return hi - lo;
  }

  bool operator==(const ModeMonomial& o) const {
    return modes == o.modes && tilde == o.tilde;
  }
  bool operator<(const ModeMonomial& o) const {
    // Compare as the merged factor sequence, Jt_0 keyed as (0, 1).
    auto key_seq = [](const ModeMonomial& m) {
      std::vector<std::pair<long, int>> k;
      k.reserve(m.modes.size() + m.tilde);
      std::size_t i = 0;
      while (i < m.modes.size() && m.modes[i] <= 0) k.push_back({m.modes[i++], 0});
      for (long t = 0; t < m.tilde; ++t) k.push_back({0, 1});
      while (i < m.modes.size()) k.push_back({m.modes[i++], 0});
      return k;
    };
    return key_seq(*this) < key_seq(o);
  }
};

// Conformal weight -(sum of indices)/N; the conjugate zero mode contributes 0.
inline Rational mode_weight(const ModeMonomial& m, long rank) {
  return Rational(-m.index_sum(), rank);
}

struct ModeAlgebraConfig {
  long rank = 1;
  ZeroModeScenario scenario = ZeroModeScenario::ZeroModeAsVariable;

  bool operator==(const ModeAlgebraConfig& o) const {
    return rank == o.rank && scenario == o.scenario;
  }
};

// Truncated hbar-graded polynomial in bosonic modes.
class ModePolynomial {
 public:
  using TermMap = std::map<ModeMonomial, Rational>;

  ModePolynomial() = default;
  ModePolynomial(ModeAlgebraConfig config, int truncation)
      : config_(config), trunc_(truncation) {}

  const ModeAlgebraConfig& config() const { return config_; }
  int truncation() const { return trunc_; }
  const std::map<int, TermMap>& orders() const { return orders_; }
  bool is_zero() const { return orders_.empty(); }

  const TermMap& order(int n) const {
    static const TermMap empty;
    auto it = orders_.find(n);
    return it == orders_.end() ? empty : it->second;
  }

  void add_term(int n, const ModeMonomial& m, const Rational& c) {
    if (c == 0 || n > trunc_ || n < 0) {
      if (n < 0 && c != 0) throw error("mode term at negative hbar order");
      return;
    }
    auto& level = orders_[n];
    auto [it, inserted] = level.try_emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0) level.erase(it);
    }
    if (level.empty()) orders_.erase(n);
  }

  ModePolynomial& operator+=(const ModePolynomial& o) {
    require_same_config(o);
    trunc_ = std::min(trunc_, o.trunc_);
    for (auto it = orders_.begin(); it != orders_.end();)
      it = (it->first > trunc_) ? orders_.erase(it) : std::next(it);
    for (auto& [n, terms] : o.orders_) {
      if (n > trunc_) continue;
      for (auto& [m, c] : terms) add_term(n, m, c);
    }
    return *this;
  }

  ModePolynomial& operator-=(const ModePolynomial& o) {
    ModePolynomial neg = o;
    neg *= Rational(-1);
    return *this += neg;
  }

  ModePolynomial& operator*=(const Rational& c) {
    if (c == 0) {
      orders_.clear();
      return *this;
    }
    for (auto& [n, terms] : orders_)
      for (auto& [m, v] : terms) v *= c;
    return *this;
  }

  friend ModePolynomial operator+(ModePolynomial a, const ModePolynomial& b) { return a += b; }
  friend ModePolynomial operator-(ModePolynomial a, const ModePolynomial& b) { return a -= b; }
  friend ModePolynomial operator*(ModePolynomial a, const Rational& c) { return a *= c; }

  bool operator==(const ModePolynomial& o) const { return orders_ == o.orders_; }

  ModePolynomial shift_orders(int s) const {
    ModePolynomial r(config_, trunc_ + s);
    for (auto& [n, terms] : orders_) {
      if (n + s < 0) throw error("hbar order would become negative in shift");
      for (auto& [m, c] : terms) r.add_term(n + s, m, c);
    }
    return r;
  }

  void require_same_config(const ModePolynomial& o) const {
    if (!(config_ == o.config_))
      throw config_mismatch_error("mode polynomials over different scenarios or ranks");
  }

 private:
  ModeAlgebraConfig config_;
  int trunc_ = 0;
  std::map<int, TermMap> orders_;
};

namespace detail {

struct ModeFactor {
  long m = 0;
  bool tilde = false;

  std::pair<long, int> key() const { return {tilde ? 0 : m, tilde ? 1 : 0}; }
};

// Reordering rules: [J_p, J_q] = p delta_{p+q,0}, [J_0, Jt_0] = sign.
inline void normal_order_into(std::vector<ModeFactor> fs, Rational coef, int sign,
                              ModePolynomial::TermMap& out) {
  for (std::size_t i = 1; i < fs.size(); ++i) {
    std::size_t j = i;
    while (j > 0 && fs[j].key() < fs[j - 1].key()) {
      const ModeFactor& left = fs[j - 1];
      const ModeFactor& right = fs[j];
      Rational delta = 0;
      if (!left.tilde && !right.tilde) {
        if (left.m + right.m == 0) delta = left.m;
      } else if (left.tilde && !right.tilde && right.m == 0) {
        delta = -sign;
      }
      if (delta != 0) {
        std::vector<ModeFactor> rest;
        rest.reserve(fs.size() - 2);
        rest.insert(rest.end(), fs.begin(), fs.begin() + j - 1);
        rest.insert(rest.end(), fs.begin() + j + 1, fs.end());
        normal_order_into(std::move(rest), coef * delta, sign, out);
      }
      std::swap(fs[j], fs[j - 1]);
      --j;
    }
  }
  ModeMonomial mono;
  for (auto& f : fs) {
    if (f.tilde)
      ++mono.tilde;
    else
      mono.modes.push_back(f.m);
  }
  auto [it, inserted] = out.try_emplace(mono, coef);
  if (!inserted) {
    it->second += coef;
    if (it->second == 0) out.erase(it);
  }
}

inline std::vector<ModeFactor> factors_of(const ModeMonomial& m) {
  std::vector<ModeFactor> fs;
  fs.reserve(m.modes.size() + m.tilde);
  std::size_t i = 0;
  while (i < m.modes.size() && m.modes[i] <= 0) fs.push_back({m.modes[i++], false});
  for (long t = 0; t < m.tilde; ++t) fs.push_back({0, true});
  while (i < m.modes.size()) fs.push_back({m.modes[i++], false});
  return fs;
}

}  // namespace detail

// Normal-ordered product modulo hbar^(K+1).
inline ModePolynomial mode_multiply(const ModePolynomial& p, const ModePolynomial& q) {
  p.require_same_config(q);
  int k = std::min(p.truncation(), q.truncation());
  int sign = zero_mode_bracket_sign(p.config().scenario);
  ModePolynomial r(p.config(), k);
  for (auto& [np, tp] : p.orders()) {
    if (np > k) break;
    for (auto& [nq, tq] : q.orders()) {
      if (np + nq > k) break;
      for (auto& [mp, cp] : tp)
        for (auto& [mq, cq] : tq) {
          auto fs = detail::factors_of(mp);
          auto gs = detail::factors_of(mq);
          fs.insert(fs.end(), gs.begin(), gs.end());
          ModePolynomial::TermMap terms;
          detail::normal_order_into(std::move(fs), cp * cq, sign, terms);
          for (auto& [m, c] : terms) r.add_term(np + nq, m, c);
        }
    }
  }
  return r;
}

inline ModePolynomial mode_commutator(const ModePolynomial& p, const ModePolynomial& q) {
  return mode_multiply(p, q) - mode_multiply(q, p);
}

// Dictionary into the Weyl algebra: J_m -> d_m and J_(-m) -> m x_m for m >= 1;
// the zero mode and its conjugate map according to the scenario. The target
// config decides which images are admissible.
inline WeylOperator to_weyl(const ModePolynomial& p, const AlgebraConfigPtr& cfg) {
  bool rho = p.config().scenario == ZeroModeScenario::ZeroModeAsDerivative;
  WeylOperator r(cfg, p.truncation());
  for (auto& [n, terms] : p.orders()) {
    for (auto& [m, c] : terms) {
      Rational coef = c;
      Monomial x, d;
      long zero_modes = 0;
      for (long mode : m.modes) {
        if (mode > 0) {
          d = d.times(Monomial::var(mode));
        } else if (mode < 0) {
          coef *= Rational(-mode);
          x = x.times(Monomial::var(-mode));
        } else {
          ++zero_modes;
        }
      }
      long a = rho ? zero_modes : m.tilde;  // d_0 exponent
      long b = rho ? m.tilde : zero_modes;  // x_0 exponent
      if (rho && a > 0 && b > 0) {
        // d_0^a x_0^b reordered into the canonical x-left form.
        for (long kk = 0; kk <= std::min(a, b); ++kk) {
          Rational f = Rational(binomial(a, kk) * binomial(b, kk) * factorial(kk));
          Monomial nx = x.times(Monomial::var(0, b - kk));
          Monomial nd = Monomial::var(0, a - kk).times(d);
          r.add_term(n, WeylMonomial{nx, nd}, coef * f);
        }
      } else {
        if (b > 0) x = x.times(Monomial::var(0, b));
        if (a > 0) d = Monomial::var(0, a).times(d);
        r.add_term(n, WeylMonomial{x, d}, coef);
      }
    }
  }
  return r;
}

}  // namespace airy
