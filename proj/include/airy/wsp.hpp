#pragma once

#include "airy/airy_ideal.hpp"
#include "airy/heisenberg.hpp"
#include "airy/parallel.hpp"

#include <functional>
#include <map>
#include <optional>
#include <tuple>
#include <vector>

namespace airy::wsp {

struct TwistConfig {
  long rank = 3;    // N >= 2
  int order = 4;    // hbar truncation K
  long k_max = 2;   // largest generator mode index in the check window
  long var_max = 12;  // variable-index window for degree >= 2 monomials

  void validate() const {
    if (rank < 2) throw error("rank must be at least 2");
    if (order < 0 || k_max < 0) throw error("window bounds must be nonnegative");
    if (var_max < rank + 1) throw error("variable window must cover the shifted modes");
  }
};

// Derived materialization windows: block_depth diagonal blocks feed the
// normalization, and single-mode terms are kept up to linear_max so that
// every materialized block has its complete linear row.
struct Windows {
  long block_depth = 0;
  long linear_max = 0;
};

inline Windows derive_windows(const TwistConfig& c) {
  long per = (c.var_max + c.rank - 1) / c.rank;
  long kb = c.order * per + 2;
  kb = std::max(kb, c.k_max + 2);
  return Windows{kb, c.rank * kb + c.rank - 1};
}

// Taylor coefficients at 1 of the twist factor
//   g(x) = (1/N) x^((1-N)/(2N)) prod_{k=1}^{N-1} (x^(1/N) - theta^k),
// computed over the rationals through the cyclotomic identity
// prod (t - theta^k) = (t^N - 1)/(t - 1) = sum_j t^j with t = (1+u)^(1/N):
//   c_k = (1/N) sum_{j=0}^{N-1} C((1-N)/(2N) + j/N, k).
inline std::vector<Rational> taylor_coefficients(long rank, int count) {
  std::vector<Rational> c(static_cast<std::size_t>(count) + 1, 0);
  for (long j = 0; j < rank; ++j) {
    Rational e = Rational(1 - rank, 2 * rank) + Rational(j, rank);
    for (int k = 0; k <= count; ++k) c[k] += binomial(e, k);
  }
  for (auto& v : c) v /= rank;
  return c;
}

// Coefficient of J_p in the delta-th z-derivative of the twisted field:
// (1/N) prod_{u=0}^{delta-1} (-p/N - 1 - u).
inline Rational mode_factor(long rank, long p, long delta) {
  Rational f(1, rank);
  for (long u = 0; u < delta; ++u) f *= Rational(-(p + rank * (1 + u)), rank);
  return f;
}

namespace detail {

struct ClassKey {
  long p, cnt, budget, min_delta;
  bool operator<(const ClassKey& o) const {
    return std::tie(p, cnt, budget, min_delta) <
           std::tie(o.p, o.cnt, o.budget, o.min_delta);
  }
};
using ClassWeightMemo = std::map<ClassKey, Rational>;

// Faa di Bruno weight of one mode class: sum over multisets of derivative
// counts {delta_1..delta_cnt} with total budget of
//   prod F(p,delta)/ (delta+1)!  divided by the multiplicities factorials.
inline Rational class_weight(long rank, long p, long cnt, long budget, long min_delta,
                             ClassWeightMemo& memo) {
  if (cnt == 0) return budget == 0 ? Rational(1) : Rational(0);
  ClassKey key{p, cnt, budget, min_delta};
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  Rational total = 0;
  for (long v = min_delta; v * cnt <= budget; ++v) {
    Rational base = mode_factor(rank, p, v) / Rational(factorial(v + 1));
    Rational power = 1;
    for (long mu = 1; mu <= cnt; ++mu) {
      power *= base;
      if (v * mu > budget) break;
      long rest = budget - v * mu;
      if (rest < (cnt - mu) * (v + 1)) continue;
      total += power / Rational(factorial(mu)) *
               class_weight(rank, p, cnt - mu, rest, v + 1, memo);
    }
  }
  memo[key] = total;
  return total;
}

// Coefficients of the sorted mode word in S_n(chi, z) for all n up to n_max
// at once (entry [n]); multiply by (-1)^size for S_n(-chi, z).
inline std::vector<Rational> faa_coefficients(long rank, const std::vector<long>& modes,
                                              long n_max, ClassWeightMemo& memo) {
  long j = static_cast<long>(modes.size());
  long max_budget = n_max - j;
  if (max_budget < 0) return {};
  std::vector<std::pair<long, long>> classes;
  for (long p : modes) {
    if (!classes.empty() && classes.back().first == p) ++classes.back().second;
    else classes.push_back({p, 1});
  }
  std::vector<Rational> acc(static_cast<std::size_t>(max_budget) + 1, 0);
  acc[0] = 1;
  for (auto& [p, cnt] : classes) {
    std::vector<Rational> next(acc.size(), 0);
    for (long b = 0; b <= max_budget; ++b) {
      if (acc[b] == 0) continue;
      for (long d = 0; b + d <= max_budget; ++d) {
        Rational w = class_weight(rank, p, cnt, d, 0, memo);
        if (w != 0) next[b + d] += acc[b] * w;
      }
    }
    acc.swap(next);
  }
  std::vector<Rational> by_n(static_cast<std::size_t>(n_max) + 1, 0);
  for (long b = 0; b <= max_budget; ++b) by_n[j + b] = acc[b];
  return by_n;
}

// Full generator-mode coefficient of one monomial, before the sigma average:
//   sum_kc c_kc [ (1 + (-1)^j) S_(m-kc) + k S_(m-1-kc) ] evaluated on the word.
inline Rational w_mode_coefficient(long rank, long m, long k,
                                   const std::vector<Rational>& ck,
                                   const std::vector<long>& modes,
                                   ClassWeightMemo& memo) {
  long j = static_cast<long>(modes.size());
  auto psi = faa_coefficients(rank, modes, m, memo);
  if (psi.empty()) return 0;
  Rational total = 0;
  for (long kc = 0; kc <= m; ++kc) {
    if (ck[kc] == 0) continue;
    if (j % 2 == 0 && psi[m - kc] != 0) total += ck[kc] * psi[m - kc] * 2;
    if (kc <= m - 1 && k != 0 && psi[m - 1 - kc] != 0)
      total += ck[kc] * psi[m - 1 - kc] * k;
  }
  return total;
}

}  // namespace detail

// Pre-shift mode W^m_k of the weight-m generator in the twisted module,
// hbar^m homogeneous. Monomials are enumerated with all indices in
// [-neg_cap, pos_cap]; additionally the single-mode pre-images
// J_c (J_-N)^a (J_-N-1)^b with c up to linear_max are included so the
// dilaton shift produces the complete linear part.
inline ModePolynomial w_mode(long rank, long m, long k, const std::vector<Rational>& ck,
                             long neg_cap, long pos_cap, long linear_max) {
  if (m < 2 || m % 2 != 0) throw error("generator weight must be even and >= 2");
  long target = rank * (k + 1 - m);
  ModeAlgebraConfig mc{rank, ZeroModeScenario::ZeroModeAsDerivative};
  ModePolynomial out(mc, static_cast<int>(m));
  detail::ClassWeightMemo memo;

  auto emit = [&](const std::vector<long>& modes) {
    Rational coef = detail::w_mode_coefficient(rank, m, k, ck, modes, memo);
    if (coef == 0) return;
    coef *= rank;  // sigma average keeps invariant words only
    ModeMonomial mono;
    mono.modes = modes;
    out.add_term(static_cast<int>(m), mono, coef);
  };

  // nondecreasing words with fixed index sum
  std::vector<long> word;
  std::function<void(long, long, long)> rec = [&](long min_p, long slots, long sum) {
    if (sum == target) emit(word);
    if (slots == 0) return;
    for (long p = std::max(min_p, -neg_cap); p <= pos_cap; ++p) {
      // after taking p, up to slots-1 further entries in [p, pos_cap] follow
      long lo = sum + p + std::min<long>(0, (slots - 1) * p);
      long hi = sum + p + (slots - 1) * pos_cap;
      if (lo > target) break;  // grows with p
      if (hi < target) continue;
      word.push_back(p);
      rec(p, slots - 1, sum + p);
      word.pop_back();
    }
  };
  rec(-neg_cap, m, 0);

  // extended single-mode pre-images beyond pos_cap
  for (long j = 1; j <= m; ++j)
    for (long a = 0; a + 1 <= j; ++a) {
      long b = j - 1 - a;
      long c = target + rank * a + (rank + 1) * b;
      if (c <= pos_cap || c > linear_max) continue;
      std::vector<long> modes;
      for (long t = 0; t < b; ++t) modes.push_back(-(rank + 1));
      for (long t = 0; t < a; ++t) modes.push_back(-rank);
      modes.push_back(c);
      emit(modes);
    }
  return out;
}

// Mode substitution hbar J_-N -> hbar J_-N + 1 and hbar J_-N-1 -> hbar J_-N-1 + 1
// in normal-ordered form; both are creation modes so a binomial expansion per
// factor suffices and no reordering occurs.
inline ModePolynomial dilaton_shift(const ModePolynomial& p, long rank) {
  ModePolynomial out(p.config(), p.truncation());
  for (auto& [n, terms] : p.orders()) {
    for (auto& [m, c] : terms) {
      long ta = m.count_of(-rank);
      long tb = m.count_of(-rank - 1);
      for (long s = 0; s <= ta; ++s)
        for (long t = 0; t <= tb; ++t) {
          if (n - s - t < 0)
            throw error("dilaton shift produced a negative hbar order");
          ModeMonomial mono;
          mono.tilde = m.tilde;
          long drop_a = s, drop_b = t;
          for (long mode : m.modes) {
            if (mode == -rank && drop_a > 0) { --drop_a; continue; }
            if (mode == -rank - 1 && drop_b > 0) { --drop_b; continue; }
            mono.modes.push_back(mode);
          }
          out.add_term(static_cast<int>(n - s - t), mono,
                       c * Rational(binomial(ta, s) * binomial(tb, t)));
        }
    }
  }
  return out;
}

// Shifted and rescaled generator mode H^m_k = (N^(m-1) m!/2) phi(W^m_k),
// truncated to `trunc` and filtered to the materialization window: degree >= 2
// terms keep only indices within [-var_max, var_max].
inline ModePolynomial h_mode(const TwistConfig& cfg, long m, long k,
                             const std::vector<Rational>& ck, const Windows& win) {
  ModePolynomial w = w_mode(cfg.rank, m, k, ck, cfg.var_max, cfg.var_max, win.linear_max);
  ModePolynomial shifted = dilaton_shift(w, cfg.rank);
  Rational scale = Rational(factorial(m)) / 2;
  for (long i = 0; i < m - 1; ++i) scale *= cfg.rank;
  ModePolynomial out(shifted.config(), cfg.order);
  for (auto& [n, terms] : shifted.orders()) {
    if (n > cfg.order) continue;
    for (auto& [mono, c] : terms) {
      if (mono.degree() >= 2) {
        bool in_window = true;
        for (long p : mono.modes)
          if (p < -cfg.var_max || p > cfg.var_max) { in_window = false; break; }
        if (!in_window) continue;
      }
      out.add_term(n, mono, c * scale);
    }
  }
  return out;
}

using ModeProvider = std::function<ModePolynomial(long m, long k)>;

struct FamilyBuild {
  TwistConfig cfg;
  Windows windows;
  AlgebraConfigPtr config;
  GeneratorFamily family;
  ModeProvider modes;  // cached accessor for H^m_k as mode polynomials
};

// Generator family {L_b}, L_(N k + m/2 - 1) = H^m_k, mapped into the Weyl
// algebra with the zero mode acting as a derivative.
inline FamilyBuild build_family(const TwistConfig& cfg, ModeProvider provider = nullptr) {
  cfg.validate();
  Windows win = derive_windows(cfg);
  auto weyl_cfg = make_config(win.linear_max, {}, {0});
  auto ck = std::make_shared<std::vector<Rational>>(
      taylor_coefficients(cfg.rank, static_cast<int>(2 * cfg.rank)));
  TwistConfig c = cfg;
  ModeProvider base = [c, win, ck](long m, long k) { return h_mode(c, m, k, *ck, win); };
  ModeProvider modes = provider ? provider : base;

  long rank = cfg.rank;
  auto make = [modes, rank, weyl_cfg](long b) {
    long m = 2 * (b % rank + 1);
    long k = b / rank;
    return to_weyl(modes(m, k), weyl_cfg);
  };
  WeightMetadata md;
  md.kind = WeightMetadata::Kind::Band;
  md.band_rank = rank;
  GeneratorFamily fam = GeneratorFamily::pattern(weyl_cfg, cfg.order,
                                                 rank * cfg.k_max + rank - 1,
                                                 rank * win.block_depth - 1, make, md);
  return FamilyBuild{cfg, win, weyl_cfg, std::move(fam), modes};
}

struct WspVerification {
  AiryReport report;
  std::optional<NormalizedFamily> normalized;
  std::optional<NormalizationMatrices> matrices;
  std::optional<TransvectionExtraction> extraction;
  // Nonzero polynomial tails of the normalized zero-mode generator decide
  // whether the conjugate zero mode enters the partition function.
  bool zero_mode_tail_nonzero = false;
  std::vector<int> zero_mode_tail_orders;
};

inline WspVerification verify_wsp_airy(const FamilyBuild& fb) {
  WspVerification v;
  NormalizedFamily nf = normalize(fb.family, fb.cfg.var_max);
  v.report = check_airy(fb.family, &nf);
  if (!v.report.airy_at_truncation) return v;
  v.normalized = nf;
  v.matrices = nf.matrices();
  v.extraction = extract_transvection(nf);
  auto it = v.extraction->p.find(0);
  if (it != v.extraction->p.end()) {
    for (auto& [n, poly] : it->second.orders()) {
      if (!poly.is_zero()) {
        v.zero_mode_tail_nonzero = true;
        v.zero_mode_tail_orders.push_back(static_cast<int>(n));
      }
    }
  }
  return v;
}

inline WspVerification verify_wsp_airy(const TwistConfig& cfg) {
  return verify_wsp_airy(build_family(cfg));
}

inline PartitionSolution partition_wsp(const FamilyBuild& fb,
                                       const NormalizedFamily* prebuilt = nullptr) {
  if (prebuilt) return solve_partition(*prebuilt);
  NormalizedFamily nf = normalize(fb.family, fb.cfg.var_max);
  return solve_partition(nf);
}

inline PartitionSolution partition_wsp(const TwistConfig& cfg) {
  return partition_wsp(build_family(cfg));
}

// ---------------------------------------------------------------------------
// Series-side construction, used as an independent route in tests.

// Series in z^(1/N) with mode-word coefficients under the free (Wick) product;
// exponents are stored scaled by N. The twist contractions live entirely in
// the Taylor coefficients c_k, so the recursion never produces delta terms.
struct TwistedSeries {
  long rank = 1;
  long neg_cap = 0, pos_cap = 0;
  long scaled_min = 0, scaled_max = 0;
  std::map<long, std::map<std::vector<long>, Rational>> coeffs;  // N*e -> word -> c

  void add(long scaled_exp, const std::vector<long>& word, const Rational& c) {
    if (c == 0 || scaled_exp < scaled_min || scaled_exp > scaled_max) return;
    auto& level = coeffs[scaled_exp];
    auto [it, inserted] = level.try_emplace(word, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0) level.erase(it);
    }
    if (level.empty()) coeffs.erase(scaled_exp);
  }
};

// eps * chi(z) = (eps/N) sum_p J_p z^(-p/N - 1).
inline TwistedSeries twisted_field(long rank, int eps, long neg_cap, long pos_cap,
                                   long scaled_min, long scaled_max) {
  TwistedSeries f;
  f.rank = rank;
  f.neg_cap = neg_cap;
  f.pos_cap = pos_cap;
  f.scaled_min = scaled_min;
  f.scaled_max = scaled_max;
  for (long p = -neg_cap; p <= pos_cap; ++p)
    f.add(-p - rank, {p}, Rational(eps, rank));
  return f;
}

inline TwistedSeries series_derivative(const TwistedSeries& s) {
  TwistedSeries r = s;
  r.coeffs.clear();
  for (auto& [se, words] : s.coeffs)
    for (auto& [w, c] : words) r.add(se - s.rank, w, c * Rational(se, s.rank));
  return r;
}

inline TwistedSeries series_shift_exponent(const TwistedSeries& s, long scaled_delta) {
  TwistedSeries r = s;
  r.coeffs.clear();
  for (auto& [se, words] : s.coeffs)
    for (auto& [w, c] : words) r.add(se + scaled_delta, w, c);
  return r;
}

inline TwistedSeries series_scale(const TwistedSeries& s, const Rational& c) {
  TwistedSeries r = s;
  for (auto& [se, words] : r.coeffs)
    for (auto& [w, v] : words) v *= c;
  return r;
}

inline TwistedSeries series_add(const TwistedSeries& a, const TwistedSeries& b) {
  TwistedSeries r = a;
  for (auto& [se, words] : b.coeffs)
    for (auto& [w, c] : words) r.add(se, w, c);
  return r;
}

// Free product with a single field: inserts the field mode into each word.
inline TwistedSeries series_field_product(const TwistedSeries& field,
                                          const TwistedSeries& s) {
  TwistedSeries r = s;
  r.coeffs.clear();
  for (auto& [fe, fwords] : field.coeffs)
    for (auto& [fw, fc] : fwords)
      for (auto& [se, words] : s.coeffs)
        for (auto& [w, c] : words) {
          std::vector<long> merged = w;
          merged.insert(std::lower_bound(merged.begin(), merged.end(), fw[0]), fw[0]);
          r.add(fe + se, merged, fc * c);
        }
  return r;
}

// Faa di Bruno polynomials S_0..S_n of the field: S_0 = 1 and
// S_j = (1/j)(d_z + field) S_(j-1).
inline std::vector<TwistedSeries> faa_di_bruno(const TwistedSeries& field, long n) {
  std::vector<TwistedSeries> s;
  TwistedSeries one = field;
  one.coeffs.clear();
  one.add(0, {}, 1);
  s.push_back(one);
  for (long j = 1; j <= n; ++j) {
    TwistedSeries next = series_add(series_derivative(s.back()),
                                    series_field_product(field, s.back()));
    s.push_back(series_scale(next, Rational(1, j)));
  }
  return s;
}

// Assembles the pre-shift W^m modes from the series route: the three sums of
// c_k against the Faa di Bruno polynomials, averaged over the cyclic orbit
// (multiply by N, keep words with index sum divisible by N). Used to
// cross-check the direct coefficient formula.
inline ModePolynomial w_mode_from_series(long rank, long m, long k,
                                         const std::vector<Rational>& ck, long neg_cap,
                                         long pos_cap) {
  long target_scaled = rank * (-k - 1);
  long slack = rank * (m + 1);
  TwistedSeries chi = twisted_field(rank, +1, neg_cap, pos_cap,
                                    target_scaled - slack, target_scaled + slack + rank * m);
  TwistedSeries mchi = twisted_field(rank, -1, neg_cap, pos_cap, chi.scaled_min,
                                     chi.scaled_max);
  auto sp = faa_di_bruno(chi, m);
  auto sm = faa_di_bruno(mchi, m);
  TwistedSeries total = chi;
  total.coeffs.clear();
  for (long kc = 0; kc <= m; ++kc) {
    if (ck[kc] == 0) continue;
    total = series_add(total,
                       series_shift_exponent(
                           series_scale(series_add(sp[m - kc], sm[m - kc]), ck[kc]),
                           -rank * kc));
    if (kc <= m - 1) {
      TwistedSeries mid = series_scale(sp[m - 1 - kc], ck[kc] * kc);
      total = series_add(total, series_shift_exponent(mid, -rank * (kc + 1)));
      TwistedSeries der = series_scale(series_derivative(sp[m - 1 - kc]), -ck[kc]);
      total = series_add(total, series_shift_exponent(der, -rank * kc));
    }
  }
  ModeAlgebraConfig mc{rank, ZeroModeScenario::ZeroModeAsDerivative};
  ModePolynomial out(mc, static_cast<int>(m));
  auto it = total.coeffs.find(target_scaled);
  if (it != total.coeffs.end()) {
    for (auto& [w, c] : it->second) {
      long is = 0;
      for (long p : w) is += p;
      if (is % rank != 0) continue;  // sigma average
      ModeMonomial mono;
      mono.modes = w;
      out.add_term(static_cast<int>(m), mono, c * rank);
    }
  }
  return out;
}

}  // namespace airy::wsp
