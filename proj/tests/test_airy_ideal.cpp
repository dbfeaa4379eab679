#include <catch2/catch_amalgamated.hpp>

#include "airy/airy_ideal.hpp"
#include "oracles.hpp"

using namespace airy;

namespace {

GeneratorFamily canonical_family(const AlgebraConfigPtr& cfg, int trunc) {
  std::vector<long> indices;
  std::vector<WeylOperator> gens;
  for (long a = 0; a <= cfg->max_index; ++a) {
    if (!cfg->allows_derivative(a)) continue;
    indices.push_back(a);
    gens.push_back(hbar_d(cfg, trunc, a));
  }
  return GeneratorFamily::finite(cfg, trunc, indices, gens);
}

GeneratorFamily counterexample_family(const AlgebraConfigPtr& cfg, int trunc) {
  WeylOperator h1 = hbar_d(cfg, trunc, 1);
  WeylOperator h2 = hbar_d(cfg, trunc, 2);
  h2.add_term(2, WeylMonomial{Monomial::var(1), Monomial::one()}, 1);
  return GeneratorFamily::finite(cfg, trunc, {1, 2}, {h1, h2});
}

GeneratorFamily cubic_family(const AlgebraConfigPtr& cfg, int trunc) {
  // single generator hbar d_1 - hbar^2 x_1^2
  WeylOperator h = hbar_d(cfg, trunc, 1);
  h.add_term(2, WeylMonomial{Monomial::var(1, 2), Monomial::one()}, -1);
  return GeneratorFamily::finite(cfg, trunc, {1}, {h});
}

}  // namespace

TEST_CASE("linear part extraction") {
  auto cfg = make_config(2);
  SECTION("canonical family gives the identity") {
    auto lp = linear_part(canonical_family(cfg, 3));
    CHECK(lp.shape_ok);
    for (long a = 0; a <= 2; ++a) {
      CHECK(lp.M.at(a).size() == 1);
      CHECK(lp.M.at(a).at(a) == 1);
    }
  }
  SECTION("violations are reported") {
    WeylOperator bad(cfg, 3);
    bad.add_term(1, WeylMonomial{Monomial::var(1), Monomial::one()}, 1);
    auto fam = GeneratorFamily::finite(cfg, 3, {0}, {bad});
    auto lp = linear_part(fam);
    CHECK(!lp.shape_ok);
    REQUIRE(!lp.violations.empty());
  }
}

TEST_CASE("finite normalization by elimination") {
  auto cfg = make_config(2, {0}, {});
  WeylOperator h1 = hbar_d(cfg, 3, 1) + hbar_d(cfg, 3, 2);
  WeylOperator h2 = hbar_d(cfg, 3, 2);
  auto fam = GeneratorFamily::finite(cfg, 3, {1, 2}, {h1, h2});
  auto nf = normalize(fam);
  CHECK(nf.generator(1) == hbar_d(cfg, 3, 1));
  CHECK(nf.generator(2) == hbar_d(cfg, 3, 2));
  CHECK(nf.matrices().Nrows.at(1).at(1) == 1);
  CHECK(nf.matrices().Nrows.at(1).at(2) == -1);
}

TEST_CASE("banded inversion reproduces the block data") {
  SparseMatrix rows;
  // two blocks of the rank-3 binomial-derivative matrix with its tails
  DenseMatrix d = pascal_block(3);
  DenseMatrix u = {{0, 0, 0}, {4, 0, 0}, {60, 30, 6}};
  for (long k = 0; k < 2; ++k)
    for (long r = 0; r < 3; ++r) {
      SparseRow row;
      for (long c = 0; c < 3; ++c) {
        if (d[r][c] != 0) row[3 * k + c] = d[r][c];
        if (k + 1 < 2 && u[r][c] != 0) row[3 * (k + 1) + c] = u[r][c];
      }
      rows[3 * k + r] = row;
    }
  auto inv = invert_banded(rows, 3, 2);
  CHECK(inv.dinv[0][0] == std::vector<Rational>{Rational(15, 16), Rational(-5, 16), Rational(1, 16)});
  CHECK(inv.tail[0][0] == std::vector<Rational>{Rational(-5, 2), Rational(-15, 8), Rational(-3, 8)});
  auto row0 = inv.row(0, 1);
  CHECK(row0.at(0) == Rational(15, 16));
  CHECK(row0.at(1) == Rational(-5, 16));
  CHECK(row0.at(2) == Rational(1, 16));

  SECTION("identity inverts to identity") {
    SparseMatrix id;
    for (long i = 0; i < 6; ++i) id[i][i] = 1;
    auto inv_id = invert_banded(id, 3, 2);
    auto r = inv_id.row(4, 1);
    CHECK(r.size() == 1);
    CHECK(r.at(4) == 1);
  }
  SECTION("singular blocks are rejected with the block index") {
    SparseMatrix sing = rows;
    sing[4] = rows.at(3);  // duplicate row inside block 1
    try {
      invert_banded(sing, 3, 2);
      FAIL("expected singular block");
    } catch (const SingularBlockError& e) {
      CHECK(e.block == 1);
    }
  }
}

TEST_CASE("pascal block values") {
  CHECK(pascal_block(3) == DenseMatrix{{2, 2, 0}, {4, 12, 12}, {6, 30, 60}});
  CHECK(pascal_block(2) == DenseMatrix{{2, 2}, {4, 12}});
  for (long n = 2; n <= 8; ++n) {
    auto inv = dense_inverse(pascal_block(n));
    CHECK(inv.has_value());
  }
  // rescaling column j by 1/j exposes the Pascal submatrix binom(2i, j)
  auto m = pascal_block(4);
  for (long r = 1; r <= 4; ++r)
    for (long c = 1; c <= 4; ++c)
      CHECK(m[r - 1][c - 1] / c == Rational(binomial(2 * r, c)));
}

TEST_CASE("reduction modulo the ideal") {
  auto cfg = make_config(2);
  SECTION("canonical family annihilates derivatives") {
    auto nf = normalize(canonical_family(cfg, 4));
    auto rr = reduce_mod_ideal(hbar_d(cfg, 4, 1), nf, 4);
    CHECK(rr.remainder.is_zero());
  }
  SECTION("hbar itself is not in the ideal") {
    auto nf = normalize(cubic_family(cfg, 4));
    WeylOperator hbar(cfg, 4);
    hbar.add_term(1, WeylMonomial{}, 1);
    auto rr = reduce_mod_ideal(hbar, nf, 4);
    PolySeries expected(4);
    expected.add(1, Polynomial(1));
    CHECK(rr.remainder == expected);
  }
  SECTION("geometric-series elimination") {
    // H = hbar d_1 + hbar^2 x_1 d_1; P = hbar^2 x_1 d_1 reduces to zero
    WeylOperator h = hbar_d(cfg, 6, 1);
    h.add_term(2, WeylMonomial{Monomial::var(1), Monomial::var(1)}, 1);
    auto fam = GeneratorFamily::finite(cfg, 6, {1}, {h});
    auto nf = normalize(fam);
    WeylOperator p(cfg, 6);
    p.add_term(2, WeylMonomial{Monomial::var(1), Monomial::var(1)}, 1);
    auto rr = reduce_mod_ideal(p, nf, 6);
    CHECK(rr.remainder.is_zero());

    // oracle: sum_j (-hbar x_1)^j H telescopes to hbar d_1 at this truncation,
    // exhibiting hbar d_1 (and hence P = H - hbar d_1) as an ideal member
    WeylOperator geom(cfg, 6);
    for (int j = 0; j <= 6; ++j) {
      WeylOperator pow(cfg, 6);
      pow.add_term(j, WeylMonomial{Monomial::var(1, j), Monomial::one()},
                   (j % 2) ? Rational(-1) : Rational(1));
      geom += multiply(pow, h);
    }
    CHECK(geom.truncated(6) == hbar_d(cfg, 6, 1));
  }
}

TEST_CASE("airy condition checker") {
  auto cfg = make_config(2);
  SECTION("the two-generator counterexample is rejected with remainder hbar") {
    auto report = check_airy(counterexample_family(cfg, 4));
    CHECK(report.boundedness.pass);
    CHECK(report.form_ok);
    CHECK(report.normalization_ok);
    CHECK(!report.commutator_ok);
    CHECK(!report.airy_at_truncation);
    REQUIRE(report.witness.has_value());
    CHECK(report.witness->i == 1);
    CHECK(report.witness->j == 2);
    PolySeries hbar_rem(2);
    hbar_rem.add(1, Polynomial(1));
    CHECK(report.witness->remainder == hbar_rem);
  }
  SECTION("a single commuting generator passes with hbar degree 2") {
    auto report = check_airy(cubic_family(cfg, 4));
    CHECK(report.airy_at_truncation);
    REQUIRE(report.hbar_degree.has_value());
    CHECK(*report.hbar_degree == 2);
    CHECK(!report.hbar_degree_within_window_only);
  }
  SECTION("non-invertible linear part is rejected") {
    WeylOperator h1 = hbar_d(cfg, 3, 1) + hbar_d(cfg, 3, 2);
    auto fam = GeneratorFamily::finite(cfg, 3, {1, 2}, {h1, h1});
    auto report = check_airy(fam);
    CHECK(!report.normalization_ok);
    CHECK(!report.airy_at_truncation);
  }
}

TEST_CASE("boundedness reports") {
  auto cfg = make_config(10);
  SECTION("finite families pass trivially") {
    auto rep = validate_bounded(canonical_family(cfg, 3));
    CHECK(rep.pass);
  }
  SECTION("derivative pattern with a band certificate passes") {
    WeightMetadata md;
    md.kind = WeightMetadata::Kind::Band;
    md.band_rank = 1;
    auto fam = GeneratorFamily::pattern(
        cfg, 3, 10, 10, [cfg](long a) { return hbar_d(cfg, 3, a); }, md);
    auto rep = validate_bounded(fam);
    CHECK(rep.pass);
  }
  SECTION("shared monomial without a certificate fails") {
    auto fam = GeneratorFamily::pattern(
        cfg, 3, 10, 10,
        [cfg](long a) {
          WeylOperator h = hbar_d(cfg, 3, a);
          h.add_term(2, WeylMonomial{Monomial::var(1), Monomial::one()}, 1);
          return h;
        },
        std::nullopt);
    auto rep = validate_bounded(fam);
    CHECK(!rep.pass);
    REQUIRE(!rep.witnesses.empty());
    CHECK(rep.witnesses[0].second.size() == 11);  // all generators in the window
  }
}

TEST_CASE("transvection extraction") {
  auto cfg = make_config(2);
  SECTION("canonical family extracts the trivial transvection") {
    auto ex = extract_transvection(normalize(canonical_family(cfg, 4)));
    CHECK(ex.t.q.empty());
    CHECK(ex.t.s_linear.empty());
  }
  SECTION("cubic generator integrates to q^(3) = -x_1^3/3") {
    auto ex = extract_transvection(normalize(cubic_family(cfg, 4)));
    Polynomial x1 = Polynomial::variable(1);
    REQUIRE(ex.t.q.count(2) == 1);
    CHECK(ex.t.q.at(2) == x1 * x1 * x1 * Rational(-1, 3));
    CHECK(ex.t.stable());
  }
  SECTION("geometric generator has a trivial transvection") {
    WeylOperator h = hbar_d(cfg, 5, 1);
    h.add_term(2, WeylMonomial{Monomial::var(1), Monomial::var(1)}, 1);
    auto fam = GeneratorFamily::finite(cfg, 5, {1}, {h});
    auto ex = extract_transvection(normalize(fam));
    CHECK(ex.t.q.empty());
    CHECK(ex.t.s_linear.empty());
  }
}

TEST_CASE("partition solver") {
  auto cfg = make_config(2);
  SECTION("canonical family has partition function 1") {
    auto sol = solve_partition(normalize(canonical_family(cfg, 4)));
    CHECK(sol.table.entries.empty());
  }
  SECTION("cubic generator yields F_{0,3}[1,1,1] = 2") {
    auto sol = solve_partition(normalize(cubic_family(cfg, 4)));
    REQUIRE(sol.table.entries.size() == 1);
    auto& [key, entry] = *sol.table.entries.begin();
    CHECK(key.two_g == 0);
    CHECK(key.n == 3);
    CHECK(key.indices == std::vector<long>{1, 1, 1});
    CHECK(entry.value == 2);
    CHECK(entry.exact);
    // direct differentiation oracle: the generator annihilates exp(h x^3/3)
    PolySeries s(4);
    Polynomial x1 = Polynomial::variable(1);
    s.add(1, x1 * x1 * x1 * Rational(1, 3));
    CHECK(sol.S.log_terms == s);
    WeylOperator h = hbar_d(cfg, 4, 1);
    h.add_term(2, WeylMonomial{Monomial::var(1, 2), Monomial::one()}, -1);
    CHECK(oracles::apply_weyl_to_exponential(h, s).is_zero());
  }
}

TEST_CASE("families from exponential data round-trip") {
  auto cfg = make_config(3);
  SECTION("zero data gives the canonical family") {
    ExponentData zero{PolySeries(4)};
    auto fam = airy_from_exponential(zero, cfg, 4);
    for (long a = 0; a <= 3; ++a) CHECK(fam.generator(a) == hbar_d(cfg, 4, a));
  }
  SECTION("cubic data reproduces the cubic generator") {
    PolySeries s(4);
    Polynomial x1 = Polynomial::variable(1);
    s.add(1, x1 * x1 * x1 * Rational(1, 3));
    auto fam = airy_from_exponential(ExponentData(s), cfg, 4);
    WeylOperator expected = hbar_d(cfg, 4, 1);
    expected.add_term(2, WeylMonomial{Monomial::var(1, 2), Monomial::one()}, -1);
    CHECK(fam.generator(1) == expected);
    CHECK(fam.generator(2) == hbar_d(cfg, 4, 2));
  }
  SECTION("random stable data round-trips through the solver") {
    oracles::Rng rng(171);
    for (int rep = 0; rep < 5; ++rep) {
      PolySeries s(4);
      for (int j = 1; j <= 3; ++j) {
        Polynomial p;
        for (int t = 0; t < 3; ++t) {
          Monomial mono;
          long deg = rng.pick(1, j + 2);
          for (long dd = 0; dd < deg; ++dd) mono = mono.times(Monomial::var(rng.pick(1, 3)));
          p.add_term(mono, rng.coeff());
        }
        s.add(j, p);
      }
      ExponentData e(s);
      auto fam = airy_from_exponential(e, cfg, 4);
      auto report = check_airy(fam);
      CHECK(report.airy_at_truncation);
      auto sol = solve_partition(normalize(fam));
      CHECK(sol.S.log_terms == s.with_truncation(3));
    }
  }
}

TEST_CASE("exactness margin grows with the order") {
  CHECK(band_exactness_bound(3, 1) == 5);
  CHECK(band_exactness_bound(3, 2) == 10);
  CHECK(band_exactness_bound(3, 3) == 15);
  for (int j = 1; j < 5; ++j)
    CHECK(band_exactness_bound(4, j) < band_exactness_bound(4, j + 1));
}
