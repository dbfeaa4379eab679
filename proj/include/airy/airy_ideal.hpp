#pragma once

#include "airy/exact_linalg.hpp"
#include "airy/family.hpp"
#include "airy/parallel.hpp"
#include "airy/weyl.hpp"

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace airy {

struct LinearPartReport {
  SparseMatrix M;  // generator index -> derivative index -> coefficient
  bool shape_ok = true;
  std::vector<std::pair<long, std::string>> violations;  // generator, problem
};

// hbar^1 derivative coefficients plus a report of anything violating the
// required shape (hbar^0 terms, or hbar^1 terms that are not constant
// multiples of single derivatives).
inline LinearPartReport linear_part(const GeneratorFamily& F,
                                    const std::vector<long>& indices) {
  LinearPartReport report;
  for (long i : indices) {
    const WeylOperator& g = F.generator(i);
    report.M.try_emplace(i, SparseRow{});
    if (!g.order(0).empty()) {
      report.shape_ok = false;
      report.violations.push_back({i, "nonzero hbar^0 part"});
    }
    for (auto& [m, c] : g.order(1)) {
      if (m.x.exps.empty() && m.d.exps.size() == 1 && m.d.exps[0].second == 1) {
        report.M[i][m.d.exps[0].first] = c;
      } else {
        report.shape_ok = false;
        report.violations.push_back({i, "hbar^1 term " + monomial_to_string(m) +
                                            " is not a constant multiple of a derivative"});
      }
    }
  }
  return report;
}

inline LinearPartReport linear_part(const GeneratorFamily& F) {
  return linear_part(F, F.check_indices());
}

struct NormalizationMatrices {
  SparseMatrix M;      // rows over the materialized generator window
  SparseMatrix Nrows;  // derivative index -> generator coefficients
};

// Change of basis to generators H~_a = hbar d_a + O(hbar^2), indexed by
// derivative index. tail(a) is H~_a - hbar d_a (orders >= 2). For infinite
// block-banded families the expansion is cut at the family window; dropped
// contributions involve only indices beyond the window.
class NormalizedFamily {
 public:
  const AlgebraConfigPtr& config() const { return config_; }
  int truncation() const { return trunc_; }
  const std::vector<long>& harvest_indices() const { return harvest_; }
  const NormalizationMatrices& matrices() const { return mats_; }
  bool order_certified_exact(int order) const { return exact_(order); }

  const WeylOperator& tail(long a) const {
    {
      std::lock_guard<std::mutex> lock(state_->mutex);
      auto it = state_->cache.find(a);
      if (it != state_->cache.end()) return it->second;
      if (!state_->make || a < harvest_lo_ || a > harvest_hi_ || !in_harvest(a))
        throw window_overflow_error("normalized generator for derivative index " +
                                    std::to_string(a) + " outside window");
    }
    WeylOperator t = state_->make(a);
    std::lock_guard<std::mutex> lock(state_->mutex);
    auto [it, inserted] = state_->cache.try_emplace(a, std::move(t));
    return it->second;
  }

  WeylOperator generator(long a) const { return hbar_d(config_, trunc_, a) + tail(a); }

  friend NormalizedFamily normalize(const GeneratorFamily&, long);

 private:
  bool in_harvest(long a) const {
    return std::binary_search(harvest_.begin(), harvest_.end(), a);
  }

  struct State {
    std::mutex mutex;
    std::map<long, WeylOperator> cache;
    std::function<WeylOperator(long)> make;
  };

  AlgebraConfigPtr config_;
  int trunc_ = 0;
  long harvest_lo_ = 0, harvest_hi_ = -1;
  std::vector<long> harvest_;
  NormalizationMatrices mats_;
  std::function<bool(int)> exact_ = [](int) { return true; };
  std::shared_ptr<State> state_ = std::make_shared<State>();
};

// Exactness margin for truncated solves over a band family: a bound on the
// largest variable-index sum that can feed an order-j coefficient of log Z.
// Contributions at order j+1 come from a generator term at order rho >= 2 in
// row N*k+i combined with f <= rho lower-order factors; the row offset i and
// the band bound N*(rho-k-1) cancel the k dependence.
inline long band_exactness_bound(long rank, int order) {
  std::vector<long> B(static_cast<std::size_t>(order) + 1, 0);
  for (int j = 1; j <= order; ++j) {
    long best = 0;
    // choose factors j_1 <= ... <= j_f with sum s, rho = j + 1 - s
    std::function<void(int, int, long, int)> rec = [&](int min_j, int sum, long acc, int f) {
      int rho = j + 1 - sum;
      if (rho >= 2 && f <= rho) {
        long total = (rank - 1) + rank * (rho - 1) + acc;
        best = std::max(best, total);
      }
      for (int next = min_j; sum + next <= j - 1; ++next)
        rec(next, sum + next, acc + B[next], f + 1);
    };
    rec(1, 0, 0, 0);
    B[j] = best;
  }
  return B[order];
}

inline std::function<bool(int)> exactness_predicate(const GeneratorFamily& F,
                                                    long exact_var_window) {
  if (F.finite() || F.metadata().kind == WeightMetadata::Kind::FiniteExact)
    return [](int) { return true; };
  long rank = F.metadata().band_rank;
  long window = exact_var_window;
  return [rank, window](int order) {
    return order >= 0 && band_exactness_bound(rank, order) <= window;
  };
}

// Builds the normalized family. exact_var_window is the variable-index window
// used for exactness certificates (defaults to the algebra window).
inline NormalizedFamily normalize(const GeneratorFamily& F, long exact_var_window = -1) {
  NormalizedFamily nf;
  nf.config_ = F.config();
  nf.trunc_ = F.truncation();
  if (exact_var_window < 0) exact_var_window = F.config()->max_index;
  nf.exact_ = exactness_predicate(F, exact_var_window);

  if (F.finite()) {
    auto lp = linear_part(F);
    if (!lp.shape_ok)
      throw error("family is not of Airy shape: " +
                  (lp.violations.empty() ? std::string("?") : lp.violations[0].second));
    auto inv = invert_finite(lp.M);
    if (!inv) throw error("linear part is not invertible");
    nf.mats_.M = lp.M;
    nf.mats_.Nrows = *inv;
    for (auto& [a, row] : *inv) {
      WeylOperator acc(F.config(), F.truncation());
      for (auto& [i, coef] : row) {
        WeylOperator scaled = F.generator(i);
        scaled *= coef;
        acc += scaled;
      }
      // The hbar^1 part must now be exactly hbar d_a.
      WeylOperator expect = hbar_d(F.config(), F.truncation(), a);
      WeylOperator tail = acc - expect;
      if (!tail.order(0).empty() || !tail.order(1).empty())
        throw error("normalization failed to produce leading derivative form");
      nf.state_->cache[a] = std::move(tail);
      nf.harvest_.push_back(a);
    }
    std::sort(nf.harvest_.begin(), nf.harvest_.end());
    if (!nf.harvest_.empty()) {
      nf.harvest_lo_ = nf.harvest_.front();
      nf.harvest_hi_ = nf.harvest_.back();
    }
    return nf;
  }

  if (F.metadata().kind != WeightMetadata::Kind::Band || F.metadata().band_rank <= 0)
    throw error("infinite family without band metadata cannot be normalized");
  long block = F.metadata().band_rank;
  long block_count = (F.lazy_max_index() + 1) / block;
  std::vector<long> all;
  for (long i = 0; i < block_count * block; ++i) all.push_back(i);
  parallel_map<int>(all.size(), [&](std::size_t i) {  // warm the generator cache
    F.generator(all[i]);
    return 0;
  });
  auto lp = linear_part(F, all);
  if (!lp.shape_ok)
    throw error("family is not of Airy shape: " +
                (lp.violations.empty() ? std::string("?") : lp.violations[0].second));
  auto binv = std::make_shared<BandedInverse>(invert_banded(lp.M, block, block_count));
  nf.mats_.M = lp.M;
  long harvest_hi = std::min(F.config()->max_index, block_count * block - 1);
  for (long a = 0; a <= harvest_hi; ++a) {
    if (!F.config()->allows_derivative(a)) continue;
    nf.harvest_.push_back(a);
    nf.mats_.Nrows[a] = binv->row(a, block_count - 1);
  }
  if (!nf.harvest_.empty()) {
    nf.harvest_lo_ = nf.harvest_.front();
    nf.harvest_hi_ = nf.harvest_.back();
  }
  GeneratorFamily fam = F;  // shared cache state
  AlgebraConfigPtr cfg = F.config();
  int K = F.truncation();
  auto rows = std::make_shared<SparseMatrix>(nf.mats_.Nrows);
  nf.state_->make = [fam, cfg, K, rows](long a) {
    WeylOperator acc(cfg, K);
    auto it = rows->find(a);
    if (it == rows->end())
      throw window_overflow_error("no normalization row for index " + std::to_string(a));
    for (auto& [m, coef] : it->second) {
      const WeylOperator& g = fam.generator(m);
      for (auto& [n, terms] : g.orders()) {
        if (n < 2) continue;  // leading derivative reconstructed exactly
        for (auto& [mono, c] : terms) acc.add_term(n, mono, c * coef);
      }
    }
    return acc;
  };
  return nf;
}

struct ReduceResult {
  PolySeries remainder;
  long substitutions = 0;
  int processed_orders = 0;
};

namespace detail {

// Correction product left * tail subtracted from work, truncated. At the top
// order only pure-polynomial products can still reach the remainder (terms
// with derivatives left there are consumed by the ideal without visible
// corrections), so derivative-carrying products at the top order are skipped.
inline void subtract_correction(WeylOperator& work, int r_left, const WeylMonomial& left,
                                const Rational& c, const WeylOperator& tail, int trunc) {
  std::vector<std::pair<Rational, std::pair<Monomial, Monomial>>> middle;
  for (auto& [n, terms] : tail.orders()) {
    int target = r_left + static_cast<int>(n);
    if (target > trunc) break;
    for (auto& [mt, ct] : terms) {
      if (target == trunc && !mt.d.exps.empty()) continue;
      if (target == trunc) {
        // only the fully contracted (pure-x) product survives to the remainder
        Rational coef = 1;
        bool ok = true;
        Monomial x = left.x;
        for (auto& [i, e] : left.d.exps) {
          long w = mt.x.exponent_of(i);
          if (w < e) { ok = false; break; }
          coef *= Rational(binomial(w, e) * factorial(e));
        }
        if (!ok) continue;
        Monomial rest;
        for (auto& [i, e] : mt.x.exps) {
          long ne = e - left.d.exponent_of(i);
          if (ne > 0) rest.exps.push_back({i, ne});
        }
        work.add_term(target, WeylMonomial{left.x.times(rest), Monomial::one()},
                      -c * ct * coef);
        continue;
      }
      detail::reorder_products(left.d, mt.x, middle);
      for (auto& [coef, xd] : middle)
        work.add_term(target, WeylMonomial{left.x.times(xd.first), xd.second.times(mt.d)},
                      -c * ct * coef);
    }
  }
}

}  // namespace detail

// Rewrites P modulo the ideal of the normalized family: order by order, the
// rightmost derivative factor hbar d_a of each non-polynomial term is
// replaced through H~_a, pushing the correction -(x^V d^D' )(H~_a - hbar d_a)
// to higher orders. Terminates at the truncation with a polynomial remainder.
inline ReduceResult reduce_mod_ideal(const WeylOperator& P, const NormalizedFamily& NF,
                                     int trunc) {
  trunc = std::min(trunc, std::min(P.truncation(), NF.truncation()));
  WeylOperator work = P.truncated(trunc);
  ReduceResult res;
  res.remainder = PolySeries(trunc);
  for (int r = 0; r <= trunc; ++r) {
    for (;;) {
      // first non-polynomial term in canonical order
      const WeylOperator::TermMap& level = work.order(r);
      auto pick = level.end();
      for (auto it = level.begin(); it != level.end(); ++it) {
        if (!it->first.is_polynomial()) {
          pick = it;
          break;
        }
      }
      if (pick == level.end()) break;
      WeylMonomial m = pick->first;
      Rational c = pick->second;
      work.add_term(r, m, -c);  // remove the term; it belongs to the ideal
      ++res.substitutions;
      if (r == trunc) continue;  // corrections land beyond the truncation
      long a = m.d.exps.back().first;
      Monomial dprime;
      for (auto& [i, e] : m.d.exps) {
        long ne = (i == a) ? e - 1 : e;
        if (ne > 0) dprime.exps.push_back({i, ne});
      }
      detail::subtract_correction(work, r - 1, WeylMonomial{m.x, dprime}, c, NF.tail(a),
                                  trunc);
    }
    Polynomial poly;
    for (auto& [m, c] : work.order(r)) poly.add_term(m.x, c);
    if (!poly.is_zero()) res.remainder.add(r, poly);
    res.processed_orders = r;
  }
  return res;
}

struct CommutatorWitness {
  long i = 0, j = 0;
  PolySeries remainder;
};

struct AiryReport {
  BoundednessReport boundedness;
  bool form_ok = false;
  std::vector<std::pair<long, std::string>> form_violations;
  bool normalization_ok = false;
  std::string normalization_detail;
  bool commutator_ok = false;
  std::optional<CommutatorWitness> witness;
  std::optional<long> hbar_degree;
  bool hbar_degree_within_window_only = false;
  bool airy_at_truncation = false;
};

// Full condition check: boundedness, leading-derivative shape with invertible
// linear part, and every pairwise commutator divided by hbar^2 reducing to
// zero modulo the ideal up to order K-2. A prebuilt normalization may be
// passed in to share its generator cache.
inline AiryReport check_airy(const GeneratorFamily& F,
                             const NormalizedFamily* prebuilt = nullptr) {
  AiryReport report;
  report.boundedness = validate_bounded(F);

  auto indices = F.check_indices();
  auto lp = linear_part(F, indices);
  report.form_ok = lp.shape_ok;
  report.form_violations = lp.violations;

  std::optional<NormalizedFamily> nf;
  if (report.form_ok) {
    try {
      if (prebuilt) nf = *prebuilt;
      else nf = normalize(F);
      report.normalization_ok = true;
      report.normalization_detail = "linear part inverted";
    } catch (const error& e) {
      report.normalization_ok = false;
      report.normalization_detail = e.what();
    }
  } else {
    report.normalization_detail = "shape violations prevent normalization";
  }

  int K = F.truncation();
  if (nf) {
    std::vector<std::pair<long, long>> pairs;
    for (std::size_t x = 0; x < indices.size(); ++x)
      for (std::size_t y = x + 1; y < indices.size(); ++y)
        pairs.push_back({indices[x], indices[y]});
    auto results = parallel_map<std::optional<CommutatorWitness>>(
        pairs.size(), [&](std::size_t p) -> std::optional<CommutatorWitness> {
          auto [i, j] = pairs[p];
          WeylOperator C = commutator(F.generator(i), F.generator(j));
          if (!C.order(0).empty() || !C.order(1).empty())
            return CommutatorWitness{i, j, PolySeries(0)};
          WeylOperator C2 = C.shift_orders(-2).truncated(K - 2);
          auto rr = reduce_mod_ideal(C2, *nf, K - 2);
          if (!rr.remainder.is_zero()) return CommutatorWitness{i, j, rr.remainder};
          return std::nullopt;
        });
    report.commutator_ok = true;
    for (auto& w : results) {
      if (w) {
        report.commutator_ok = false;
        report.witness = *w;
        break;
      }
    }
  }

  long top = -1;
  for (long i : indices) {
    const WeylOperator& g = F.generator(i);
    if (!g.orders().empty()) top = std::max<long>(top, g.orders().rbegin()->first);
  }
  if (top >= 0) {
    report.hbar_degree = top;
    report.hbar_degree_within_window_only = (top >= K);
  }

  report.airy_at_truncation = report.boundedness.pass && report.form_ok &&
                              report.normalization_ok && report.commutator_ok;
  return report;
}

namespace detail {

// Euler-operator integration of a gradient family over the given variable
// set; returns the primitive with zero constant term, or nullopt when the
// gradients are not closed (the primitive fails to reproduce them).
inline std::optional<Polynomial> integrate_gradients(
    const std::map<long, Polynomial>& grads, const std::set<long>& vars,
    std::pair<long, long>* witness = nullptr) {
  Polynomial combined;
  for (auto& [a, g] : grads) combined += Polynomial::variable(a) * g;
  Polynomial primitive;
  for (auto& [m, c] : combined.terms()) {
    long dj = 0;
    for (auto& [i, e] : m.exps)
      if (vars.count(i)) dj += e;
    if (dj == 0) throw error("gradient integration produced a var-free term");
    primitive.add_term(m, c / dj);
  }
  for (auto& [a, g] : grads) {
    if (!(primitive.derivative(a) == g)) {
      if (witness) {
        // locate a genuine asymmetry for the report
        for (auto& [b, h] : grads) {
          if (!(g.derivative(b) == h.derivative(a))) {
            *witness = {a, b};
            break;
          }
        }
      }
      return std::nullopt;
    }
  }
  return primitive;
}

}  // namespace detail

struct TransvectionExtraction {
  Transvection t;
  // per-index polynomial tails of the first-order forms: index -> series p_a
  std::map<long, PolySeries> p;
  int consistent_through = 0;  // highest hbar order with verified closedness
};

// First-order normal forms H-bar_a = hbar d_a + sum_n hbar^n p_a^(n) computed
// by reduction, then integrated to the transvection polynomials q^(n+1) (and
// the linear s^(n+1) pieces on derivative-only indices).
inline TransvectionExtraction extract_transvection(const NormalizedFamily& NF) {
  TransvectionExtraction ex;
  int K = NF.truncation();
  const auto& cfg = *NF.config();
  std::set<long> jset;
  std::vector<long> iset;
  for (long a : NF.harvest_indices()) {
    if (cfg.allows_variable(a)) jset.insert(a);
    else iset.push_back(a);
  }
  for (long a : NF.harvest_indices()) {
    auto rr = reduce_mod_ideal(hbar_d(NF.config(), K, a), NF, K);
    PolySeries p(K);
    p -= rr.remainder;
    if (!p.at(0).is_zero() || !p.at(1).is_zero())
      throw error("reduction of hbar d_a left terms below order 2");
    ex.p[a] = std::move(p);
  }
  ex.consistent_through = K;
  for (int n = 2; n <= K; ++n) {
    std::map<long, Polynomial> grads;
    for (long a : jset)
      if (!ex.p[a].at(n).is_zero()) grads[a] = ex.p[a].at(n);
    Polynomial s;
    for (long a : iset) {
      const Polynomial& pa = ex.p[a].at(n);
      if (pa.is_zero()) continue;
      if (pa.degree() > 0) {
        if (NF.order_certified_exact(n - 1))
          throw closedness_error("derivative-only index " + std::to_string(a) +
                                 " has a non-constant tail at order " + std::to_string(n));
        ex.consistent_through = std::min(ex.consistent_through, n - 1);
        s += Polynomial::variable(a) * Polynomial(pa.constant_term());
        continue;
      }
      s += Polynomial::variable(a) * pa;
    }
    std::pair<long, long> witness{-1, -1};
    auto q = detail::integrate_gradients(grads, jset, &witness);
    if (!q) {
      if (NF.order_certified_exact(n - 1))
        throw closedness_error("gradients at order " + std::to_string(n) +
                               " are not closed between indices " +
                               std::to_string(witness.first) + " and " +
                               std::to_string(witness.second));
      ex.consistent_through = std::min(ex.consistent_through, n - 1);
      continue;
    }
    if (!q->is_zero()) ex.t.q[n] = *q;
    if (!s.is_zero()) ex.t.s_linear[n] = s;
  }
  ex.t.validate();
  if (!ex.t.stable()) throw error("extracted transvection is not stable");
  return ex;
}

struct FgnKey {
  long two_g = 0;
  long n = 0;
  std::vector<long> indices;  // sorted, one entry per degree

  long euler_order() const { return two_g + n - 2; }

  bool operator<(const FgnKey& o) const {
    if (euler_order() != o.euler_order()) return euler_order() < o.euler_order();
    if (n != o.n) return n < o.n;
    if (indices != o.indices) return indices < o.indices;
    return two_g < o.two_g;
  }
  bool operator==(const FgnKey& o) const {
    return two_g == o.two_g && n == o.n && indices == o.indices;
  }
};

struct FgnEntry {
  Rational value;
  bool exact = true;
};

struct FgnTable {
  std::map<FgnKey, FgnEntry> entries;
  int truncation = 0;
};

// Splits log Z into the coefficients F_{g,n}[a_1..an]: the order-j piece of
// degree n sits at 2g = j + 2 - n, and the symmetric coefficient of a
// monomial is its polynomial coefficient times the product of exponent
// factorials.
inline FgnTable table_from_series(const PolySeries& S,
                                  const std::function<bool(int)>& order_exact) {
  FgnTable table;
  table.truncation = S.truncation();
  for (auto& [j, poly] : S.orders()) {
    for (auto& [m, c] : poly.terms()) {
      FgnKey key;
      key.n = m.degree();
      key.two_g = j + 2 - key.n;
      if (key.n < 1 || key.two_g < 0)
        throw error("log Z term outside the stable (g,n) range");
      Rational value = c;
      for (auto& [i, e] : m.exps) {
        value *= Rational(factorial(e));
        for (long r = 0; r < e; ++r) key.indices.push_back(i);
      }
      table.entries[key] = FgnEntry{value, order_exact(static_cast<int>(j))};
    }
  }
  return table;
}

inline PolySeries series_from_transvection(const Transvection& t, int trunc) {
  PolySeries S(trunc);
  for (int j = 1; j <= trunc; ++j) {
    Polynomial p = t.combined(j + 1);
    if (!p.is_zero()) {
      p *= Rational(-1);
      S.add(j, p);
    }
  }
  return S;
}

struct PartitionSolution {
  ExponentData S;
  FgnTable table;
  int consistent_through = 0;
};

// Order-by-order solve of H~_a . Z = 0: at order r the leading derivative
// determines the gradient of the order r-1 piece of log Z from strictly
// lower orders; the gradients are then integrated with the Euler operator.
inline PartitionSolution solve_partition(const NormalizedFamily& NF) {
  int K = NF.truncation();
  const auto& cfg = *NF.config();
  std::set<long> jset;
  std::vector<long> iset;
  for (long a : NF.harvest_indices()) {
    if (cfg.allows_variable(a)) jset.insert(a);
    else iset.push_back(a);
  }
  PolySeries S(std::max(K - 1, 0));
  int consistent_through = K - 1;
  for (int r = 2; r <= K; ++r) {
    // known orders <= r-2 suffice at order r; pad the truncation so the
    // action is evaluated through order r
    ExponentData cur(S.with_truncation(r));
    auto grads_for = parallel_map<std::pair<long, Polynomial>>(
        NF.harvest_indices().size(), [&](std::size_t idx) {
          long a = NF.harvest_indices()[idx];
          PolySeries acted = act_on_exponential(NF.tail(a).truncated(r), cur);
          Polynomial g = acted.at(r);
          g *= Rational(-1);
          return std::make_pair(a, g);
        });
    std::map<long, Polynomial> grads;
    Polynomial spart;
    for (auto& [a, g] : grads_for) {
      if (g.is_zero()) continue;
      if (jset.count(a)) {
        grads[a] = g;
      } else {
        if (g.degree() > 0) {
          if (NF.order_certified_exact(r - 1))
            throw closedness_error("derivative-only index " + std::to_string(a) +
                                   " received a non-constant gradient at order " +
                                   std::to_string(r));
          consistent_through = std::min(consistent_through, r - 2);
          spart += Polynomial::variable(a) * Polynomial(g.constant_term());
        } else {
          spart += Polynomial::variable(a) * g;
        }
      }
    }
    std::pair<long, long> witness{-1, -1};
    auto q = detail::integrate_gradients(grads, jset, &witness);
    if (!q) {
      if (NF.order_certified_exact(r - 1))
        throw closedness_error("partition equations inconsistent at order " +
                               std::to_string(r) + " between indices " +
                               std::to_string(witness.first) + " and " +
                               std::to_string(witness.second));
      consistent_through = std::min(consistent_through, r - 2);
      continue;
    }
    Polynomial piece = *q + spart;
    if (piece.degree() > r + 1) throw error("log Z piece exceeds its degree bound");
    S.add(r - 1, piece);
  }
  PartitionSolution sol{ExponentData(S), FgnTable{}, consistent_through};
  auto exact = [&NF, consistent_through](int j) {
    return j <= consistent_through && NF.order_certified_exact(j);
  };
  sol.table = table_from_series(S, exact);
  sol.table.truncation = K;
  return sol;
}

// Family of first-order operators annihilating exp(S): hbar d_a minus the
// graded gradient of S. Round-trips with solve_partition on the window.
inline GeneratorFamily airy_from_exponential(const ExponentData& E,
                                             const AlgebraConfigPtr& cfg, int trunc) {
  E.validate();
  if (!E.stable()) throw error("exponential data must be stable (orders >= 1)");
  std::vector<long> indices;
  std::vector<WeylOperator> gens;
  for (long a = 0; a <= cfg->max_index; ++a) {
    if (!cfg->allows_derivative(a)) continue;
    WeylOperator h = hbar_d(cfg, trunc, a);
    for (auto& [j, p] : E.log_terms.orders()) {
      if (j + 1 > trunc) continue;
      Polynomial g = p.derivative(a);
      for (auto& [m, c] : g.terms())
        h.add_term(static_cast<int>(j) + 1, WeylMonomial{m, Monomial::one()}, -c);
    }
    indices.push_back(a);
    gens.push_back(std::move(h));
  }
  return GeneratorFamily::finite(cfg, trunc, std::move(indices), std::move(gens));
}

}  // namespace airy
