#include <catch2/catch_amalgamated.hpp>

#include "airy/family.hpp"
#include "airy/heisenberg.hpp"
#include "oracles.hpp"

using namespace airy;

namespace {

ModePolynomial word(const ModeAlgebraConfig& mc, int trunc, int order,
                    std::vector<long> modes, long tilde = 0, Rational c = 1) {
  ModePolynomial p(mc, trunc);
  std::sort(modes.begin(), modes.end());
  p.add_term(order, ModeMonomial{std::move(modes), tilde}, c);
  return p;
}

ModePolynomial random_mode_poly(const ModeAlgebraConfig& mc, int trunc, oracles::Rng& rng,
                                bool allow_tilde) {
  ModePolynomial p(mc, trunc);
  int terms = static_cast<int>(rng.pick(1, 3));
  for (int t = 0; t < terms; ++t) {
    int degree = static_cast<int>(rng.pick(0, 2));
    std::vector<long> modes;
    for (int j = 0; j < degree; ++j) modes.push_back(rng.pick(-4, 4));
    std::sort(modes.begin(), modes.end());
    long tilde = allow_tilde && rng.pick(0, 3) == 0 ? 1 : 0;
    int order = static_cast<int>(rng.pick(degree + tilde, trunc));
    p.add_term(order, ModeMonomial{std::move(modes), tilde}, rng.coeff());
  }
  return p;
}

}  // namespace

TEST_CASE("mode products normal order with the right contractions") {
  ModeAlgebraConfig mc{3, ZeroModeScenario::ZeroModeAsDerivative};
  SECTION("single contraction") {
    auto r = mode_multiply(word(mc, 4, 1, {2}), word(mc, 4, 1, {-2}));
    ModePolynomial expected(mc, 4);
    expected.add_term(2, ModeMonomial{{-2, 2}, 0}, 1);
    expected.add_term(2, ModeMonomial{{}, 0}, 2);
    CHECK(r == expected);
  }
  SECTION("already ordered") {
    auto r = mode_multiply(word(mc, 4, 1, {1}), word(mc, 4, 1, {1}));
    CHECK(r == word(mc, 4, 2, {1, 1}));
  }
  SECTION("double swap against the brute-force oracle") {
    auto r = mode_multiply(word(mc, 4, 1, {3}), word(mc, 4, 2, {-3, -3}));
    auto table = oracles::brute_normal_order({3, -3, -3}, 1);
    ModePolynomial expected(mc, 4);
    for (auto& [w, c] : table) expected.add_term(3, ModeMonomial{w, 0}, c);
    CHECK(r == expected);
    // frozen value: J_-3 J_-3 J_3 + 6 J_-3
    ModePolynomial frozen(mc, 4);
    frozen.add_term(3, ModeMonomial{{-3, -3, 3}, 0}, 1);
    frozen.add_term(3, ModeMonomial{{-3}, 0}, 6);
    CHECK(r == frozen);
  }
  SECTION("random words against the oracle") {
    oracles::Rng rng(97);
    for (int rep = 0; rep < 60; ++rep) {
      std::vector<long> w1, w2;
      for (long i = rng.pick(0, 3); i > 0; --i) w1.push_back(rng.pick(-3, 3));
      for (long i = rng.pick(1, 3); i > 0; --i) w2.push_back(rng.pick(-3, 3));
      std::sort(w1.begin(), w1.end());
      std::sort(w2.begin(), w2.end());
      std::vector<long> concat = w1;
      concat.insert(concat.end(), w2.begin(), w2.end());
      auto table = oracles::brute_normal_order(concat, 1);
      int n1 = static_cast<int>(w1.size()), n2 = static_cast<int>(w2.size());
      auto r = mode_multiply(word(mc, 8, n1, w1), word(mc, 8, n2, w2));
      ModePolynomial expected(mc, 8);
      for (auto& [w, c] : table) expected.add_term(n1 + n2, ModeMonomial{w, 0}, c);
      CHECK(r == expected);
    }
  }
}

TEST_CASE("conjugate zero mode brackets by scenario") {
  // rho: [J_0, Jt_0] = +1, kappa: [J_0, Jt_0] = -1
  ModeAlgebraConfig rho{2, ZeroModeScenario::ZeroModeAsDerivative};
  ModeAlgebraConfig kappa{2, ZeroModeScenario::ZeroModeAsVariable};
  for (auto mc : {rho, kappa}) {
    auto j0 = word(mc, 4, 1, {0});
    auto jt = word(mc, 4, 1, {}, 1);
    auto c = mode_commutator(j0, jt);
    ModePolynomial expected(mc, 4);
    expected.add_term(2, ModeMonomial{}, zero_mode_bracket_sign(mc.scenario));
    CHECK(c == expected);
    // positive modes commute with the conjugate zero mode
    CHECK(mode_commutator(word(mc, 4, 1, {1}), jt).is_zero());
  }
}

TEST_CASE("weight grading") {
  CHECK(mode_weight(ModeMonomial{{2, 5}, 0}, 3) == Rational(-7, 3));
  CHECK(mode_weight(ModeMonomial{}, 3) == 0);
  CHECK(mode_weight(ModeMonomial{{-4, -3}, 0}, 3) == Rational(7, 3));
  CHECK(mode_weight(ModeMonomial{{-4, -3}, 2}, 3) == Rational(7, 3));  // tilde adds 0
}

TEST_CASE("weight is additive and preserved by normal ordering") {
  ModeAlgebraConfig mc{3, ZeroModeScenario::ZeroModeAsDerivative};
  oracles::Rng rng(101);
  for (int rep = 0; rep < 40; ++rep) {
    auto p = random_mode_poly(mc, 6, rng, false);
    auto q = random_mode_poly(mc, 6, rng, false);
    auto r = mode_multiply(p, q);
    // collect the input weights that can occur per hbar order
    std::map<int, std::set<Rational>> expected;
    for (auto& [np, tp] : p.orders())
      for (auto& [mp, cp] : tp)
        for (auto& [nq, tq] : q.orders())
          for (auto& [mq, cq] : tq)
            expected[static_cast<int>(np + nq)].insert(mode_weight(mp, 3) +
                                                       mode_weight(mq, 3));
    for (auto& [n, terms] : r.orders())
      for (auto& [m, c] : terms)
        CHECK(expected[static_cast<int>(n)].count(mode_weight(m, 3)) == 1);
  }
}

TEST_CASE("dictionary into the Weyl algebra") {
  auto cfg_free = make_config(4);
  ModeAlgebraConfig rho{3, ZeroModeScenario::ZeroModeAsDerivative};
  ModeAlgebraConfig kappa{3, ZeroModeScenario::ZeroModeAsVariable};

  SECTION("negative modes scale by the index") {
    auto p = word(rho, 4, 2, {-2, 3});
    auto w = to_weyl(p, cfg_free);
    WeylOperator expected(cfg_free, 4);
    expected.add_term(2, WeylMonomial{Monomial::var(2), Monomial::var(3)}, 2);
    CHECK(w == expected);
  }
  SECTION("zero mode by scenario") {
    auto w_rho = to_weyl(word(rho, 4, 1, {0}), cfg_free);
    CHECK(w_rho == hbar_d(cfg_free, 4, 0));
    auto w_kappa = to_weyl(word(kappa, 4, 1, {0}), cfg_free);
    CHECK(w_kappa == hbar_x(cfg_free, 4, 0));
  }
  SECTION("conjugate zero mode reorders under rho") {
    // J_0 Jt_0 maps to d_0 x_0 = x_0 d_0 + 1
    auto p = word(rho, 4, 2, {0}, 1);
    auto w = to_weyl(p, cfg_free);
    WeylOperator expected(cfg_free, 4);
    expected.add_term(2, WeylMonomial{Monomial::var(0), Monomial::var(0)}, 1);
    expected.add_term(2, WeylMonomial{}, 1);
    CHECK(w == expected);
    auto wk = to_weyl(word(kappa, 4, 2, {0}, 1), cfg_free);
    WeylOperator already(cfg_free, 4);
    already.add_term(2, WeylMonomial{Monomial::var(0), Monomial::var(0)}, 1);
    CHECK(wk == already);
  }
  SECTION("subalgebra constraints from the target configuration") {
    auto cfg_rho = make_config(4, {}, {0});
    CHECK_THROWS_AS(to_weyl(word(rho, 4, 1, {}, 1), cfg_rho), window_overflow_error);
    CHECK_NOTHROW(to_weyl(word(rho, 4, 2, {0, 0}), cfg_rho));
  }
}

TEST_CASE("dictionary is a homomorphism") {
  auto cfg_free = make_config(4);
  for (auto scenario :
       {ZeroModeScenario::ZeroModeAsDerivative, ZeroModeScenario::ZeroModeAsVariable}) {
    ModeAlgebraConfig mc{3, scenario};
    oracles::Rng rng(scenario == ZeroModeScenario::ZeroModeAsDerivative ? 111 : 211);
    for (int rep = 0; rep < 50; ++rep) {
      auto p = random_mode_poly(mc, 6, rng, true);
      auto q = random_mode_poly(mc, 6, rng, true);
      CHECK(to_weyl(mode_multiply(p, q), cfg_free) ==
            multiply(to_weyl(p, cfg_free), to_weyl(q, cfg_free)));
    }
  }
}

TEST_CASE("scenario structure of dictionary images") {
  auto cfg_free = make_config(4);
  ModeAlgebraConfig rho{3, ZeroModeScenario::ZeroModeAsDerivative};
  ModeAlgebraConfig kappa{3, ZeroModeScenario::ZeroModeAsVariable};
  oracles::Rng rng(131);
  for (int rep = 0; rep < 30; ++rep) {
    auto p = random_mode_poly(rho, 6, rng, false);  // no conjugate zero mode
    ModePolynomial pk(kappa, 6);
    for (auto& [n, terms] : p.orders())
      for (auto& [m, c] : terms) pk.add_term(static_cast<int>(n), m, c);
    WeylOperator wr = to_weyl(p, cfg_free);
    for (auto& [n, terms] : wr.orders())
      for (auto& [m, c] : terms) CHECK(m.x.exponent_of(0) == 0);
    WeylOperator wk = to_weyl(pk, cfg_free);
    for (auto& [n, terms] : wk.orders())
      for (auto& [m, c] : terms) CHECK(m.d.exponent_of(0) == 0);
  }
}

TEST_CASE("weight window certificate") {
  WeightMetadata md;
  md.kind = WeightMetadata::Kind::Band;
  md.band_rank = 3;
  // signature with index sum 1 at order 1: generators with 3(k+1-1) <= 1
  CHECK(weight_window_bound(md, 1, 1) == 2);   // k = 0 block only
  // index sum 0 at order 2: k <= 1
  CHECK(weight_window_bound(md, 0, 2) == 5);
  // large negative sums exclude all blocks beyond the window start
  CHECK(weight_window_bound(md, -7, 1) < 0);
  // monotone in the index sum
  for (long is = -6; is < 12; ++is)
    CHECK(weight_window_bound(md, is, 2) <= weight_window_bound(md, is + 1, 2));
}
