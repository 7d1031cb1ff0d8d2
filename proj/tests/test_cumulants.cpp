#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <thread>

#include "oracles.hpp"
#include "wickbound/cumulants.hpp"
#include "wickbound/fields/discrete.hpp"
#include "wickbound/fields/gaussian.hpp"

using namespace wickbound;

namespace {

IndexSequence random_sequence(std::mt19937_64& rng, std::size_t sites, std::size_t length, bool complex_valued) {
  std::uniform_int_distribution<std::uint64_t> site(0, sites - 1);
  std::bernoulli_distribution flip(0.5);
  IndexSequence I;
  for (std::size_t i = 0; i < length; ++i) I.push_back({site(rng), complex_valued && flip(rng)});
  return I;
}

struct UnitCumulants {
  cplx cumulant(std::span<const SiteRef>) const { return 1.0; }
};

// Single variable whose n-th moment is Bell(n): the Poisson(1) law.
class BellMoments : public MomentProvider {
 public:
  cplx moment(std::span<const SiteRef> I) const override { return static_cast<double>(bell_number(I.size())); }
  std::size_t max_order() const override { return 8; }
};

FiniteDiscreteField bernoulli(double p) { return FiniteDiscreteField({0}, {{1.0 - p, {0.0}}, {p, {1.0}}}); }

}  // namespace

TEST_CASE("low-order cumulants") {
  std::mt19937_64 rng(11);
  const auto f = random_discrete_field(rng, 3, 5);
  const CumulantTable t(f);
  const auto y0 = IndexSequence{{0, false}}, y01 = IndexSequence{{0, false}, {1, true}};
  CHECK(std::abs(t.cumulant(y0) - f.moment(y0)) < 1e-15);
  const cplx cov = f.moment(y01) - f.moment(y0) * f.moment(IndexSequence{{1, true}});
  CHECK(std::abs(t.cumulant(y01) - cov) < 1e-14);
}

TEST_CASE("unit cumulants reconstruct Bell numbers and invert back") {
  const UnitCumulants unit;
  const auto I3 = make_sequence({0, 0, 0});
  const auto I4 = make_sequence({0, 0, 0, 0});
  CHECK(std::abs(moments_from_cumulants(unit, I3) - 5.0) < 1e-12);
  CHECK(std::abs(moments_from_cumulants(unit, I4) - 15.0) < 1e-12);
  const BellMoments poisson;
  const CumulantTable t(poisson);
  for (std::size_t n = 1; n <= 8; ++n) {
    IndexSequence I(n, SiteRef{0, false});
    CHECK(std::abs(t.cumulant(I) - 1.0) < 1e-12);
  }
}

TEST_CASE("recursion agrees with partition inversion") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = random_discrete_field(rng, 3, 4 + trial % 3, trial % 2 == 0);
    const CumulantTable t(f);
    for (std::size_t n = 1; n <= 5; ++n) {
      const auto I = random_sequence(rng, 3, n, trial % 2 == 1);
      CHECK(std::abs(t.cumulant(I) - oracle::cumulant(f, I)) < 1e-12);
    }
  }
}

TEST_CASE("moment-cumulant round trip to order 6") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = random_discrete_field(rng, 4, 6);
    const CumulantTable t(f);
    for (std::size_t n = 1; n <= 6; ++n) {
      const auto I = random_sequence(rng, 4, n, true);
      CHECK(std::abs(moments_from_cumulants(t, I) - oracle::moment(f, I)) < 1e-10);
    }
  }
}

TEST_CASE("zero-mean Gaussian pair moment equals covariance") {
  const FiniteGaussianField g({0, 1}, {0.0, 0.0}, {{2.0, 0.7}, {0.7, 1.0}});
  const GaussianCumulants k(g);
  CHECK(std::abs(moments_from_cumulants(k, make_sequence({0, 1})) - 0.7) < 1e-15);
}

TEST_CASE("permutation invariance to order 5") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const auto f = random_discrete_field(rng, 3, 5);
    const CumulantTable t(f);
    auto I = random_sequence(rng, 3, 5, true);
    const cplx ref = oracle::cumulant(f, I);
    for (int s = 0; s < 10; ++s) {
      std::shuffle(I.begin(), I.end(), rng);
      const CumulantTable fresh(f);
      CHECK(std::abs(fresh.cumulant(I) - ref) < 1e-12);
      CHECK(std::abs(t.cumulant(I) - ref) < 1e-12);
    }
  }
}

TEST_CASE("recursion anchor choice does not matter") {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 10; ++trial) {
    const auto f = random_discrete_field(rng, 4, 6);
    const CumulantTable first(f, AnchorRule::First), middle(f, AnchorRule::Middle), last(f, AnchorRule::Last);
    for (std::size_t n = 2; n <= 5; ++n) {
      const auto I = random_sequence(rng, 4, n, true);
      const cplx a = first.cumulant(I);
      CHECK(std::abs(middle.cumulant(I) - a) < 1e-12);
      CHECK(std::abs(last.cumulant(I) - a) < 1e-12);
    }
  }
}

TEST_CASE("multilinearity") {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const cplx a(0.6, -0.3), b(-1.2, 0.4);
  for (int trial = 0; trial < 5; ++trial) {
    auto base = random_discrete_field(rng, 3, 5);
    // Site 3 holds a*y0 + b*y1 atom by atom.
    std::vector<Atom> atoms = base.atoms();
    for (auto& at : atoms) at.values.push_back(a * at.values[0] + b * at.values[1]);
    const FiniteDiscreteField f({0, 1, 2, 3}, atoms);
    const CumulantTable t(f);
    const IndexSequence rest{{2, false}, {1, true}, {2, true}};
    auto with = [&](std::uint64_t site) {
      IndexSequence I{{site, false}};
      I.insert(I.end(), rest.begin(), rest.end());
      return t.cumulant(I);
    };
    CHECK(std::abs(with(3) - (a * with(0) + b * with(1))) < 1e-12);
  }
}

TEST_CASE("moments are conjugation consistent") {
  std::mt19937_64 rng(17);
  const auto f = random_discrete_field(rng, 3, 5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto I = random_sequence(rng, 3, 4, true);
    CHECK(std::abs(f.moment(conjugate(I)) - std::conj(f.moment(I))) < 1e-14);
  }
  CHECK(f.moment(IndexSequence{}) == cplx(1.0));
}

TEST_CASE("order overflow and empty sequences") {
  std::mt19937_64 rng(18);
  const FiniteDiscreteField f = FiniteDiscreteField({0}, {{1.0, {1.0}}}, 3);
  const CumulantTable t(f);
  CHECK_THROWS_AS(t.cumulant(make_sequence({0, 0, 0, 0})), OrderOverflow);
  CHECK_THROWS_AS(t.cumulant(IndexSequence{}), InvalidInput);
  CHECK_THROWS_AS(wick_expansion(t, make_sequence({0, 0, 0, 0})), OrderOverflow);
}

TEST_CASE("Wick expansions of low order") {
  std::mt19937_64 rng(19);
  const auto f = random_discrete_field(rng, 2, 4, true);
  const CumulantTable t(f);
  const cplx m0 = f.moment(make_sequence({0})), m1 = f.moment(make_sequence({1})), m01 = f.moment(make_sequence({0, 1}));

  const auto w1 = wick_expansion(t, make_sequence({0}));
  REQUIRE(w1.terms.size() == 2);
  CHECK(w1.terms[0].coefficient == cplx(1.0));
  CHECK(std::abs(w1.terms[1].coefficient + m0) < 1e-15);

  const auto w2 = wick_expansion(t, make_sequence({0, 1}));
  REQUIRE(w2.terms.size() == 4);
  CHECK(w2.terms[0].monomial == make_sequence({0, 1}));
  CHECK(w2.terms[0].coefficient == cplx(1.0));
  std::map<IndexSequence, cplx> c;
  for (const auto& term : w2.terms) c[term.monomial] = term.coefficient;
  CHECK(std::abs(c[make_sequence({0})] + m1) < 1e-15);
  CHECK(std::abs(c[make_sequence({1})] + m0) < 1e-15);
  CHECK(std::abs(c[IndexSequence{}] - (2.0 * m0 * m1 - m01)) < 1e-15);
  CHECK(std::abs(w2.expectation(t)) < 1e-15);

  const FiniteGaussianField centered({0, 1}, {0.0, 0.0}, {{1.0, 0.3}, {0.3, 2.0}});
  const CumulantTable ct(centered);
  const auto wc = wick_expansion(ct, make_sequence({0, 1}));
  REQUIRE(wc.terms.size() == 2);
  CHECK(std::abs(wc.terms[1].coefficient + 0.3) < 1e-15);
}

TEST_CASE("Wick polynomials are centered to order 5") {
  std::mt19937_64 rng(20);
  for (int trial = 0; trial < 10; ++trial) {
    const auto f = random_discrete_field(rng, 3, 5);
    const CumulantTable t(f);
    for (std::size_t n = 1; n <= 5; ++n) {
      const auto I = random_sequence(rng, 3, n, true);
      const auto w = wick_expansion(t, I);
      CHECK(w.terms.front().coefficient == cplx(1.0));
      CHECK(w.terms.front().monomial == canonical_key(I));
      CHECK(std::abs(w.expectation(t)) < 1e-10);
      const cplx direct = oracle::expectation(f, [&](std::size_t a) {
        return w.evaluate([&](const SiteRef& r) { return oracle::atom_value(f, a, r); });
      });
      CHECK(std::abs(direct) < 1e-10);
      // The expansion evaluated atom by atom matches the oracle recursion.
      oracle::WickValues ref(f, I);
      for (std::size_t a = 0; a < f.atoms().size(); ++a) {
        const cplx mine = w.evaluate([&](const SiteRef& r) { return oracle::atom_value(f, a, r); });
        CHECK(std::abs(mine - ref.full(a)) < 1e-10);
      }
    }
  }
}

TEST_CASE("two-pair Wick identity") {
  const FiniteGaussianField g({0, 1, 2, 3}, {0.0, 0.0, 0.0, 0.0},
                              {{1.0, 0.2, 0.3, 0.1}, {0.2, 1.5, -0.4, 0.25}, {0.3, -0.4, 2.0, 0.5}, {0.1, 0.25, 0.5, 1.2}});
  const GaussianCumulants k(g);
  const cplx value = wick_product_expectation(k, {make_sequence({0, 1}), make_sequence({2, 3})}, {});
  CHECK(std::abs(value - (0.3 * 0.25 + 0.1 * -0.4)) < 1e-15);

  std::mt19937_64 rng(21);
  const auto f = random_discrete_field(rng, 4, 6);
  const CumulantTable t(f);
  auto kap = [&](std::initializer_list<std::uint64_t> s) { return oracle::cumulant(f, make_sequence(s)); };
  const cplx terms = kap({0, 2}) * kap({1, 3}) + kap({0, 3}) * kap({1, 2}) + kap({0, 1, 2, 3});
  const cplx mine = wick_product_expectation(t, {make_sequence({0, 1}), make_sequence({2, 3})}, {});
  const cplx direct = oracle::wick_product(f, {make_sequence({0, 1}), make_sequence({2, 3})}, {});
  CHECK(std::abs(mine - terms) < 1e-12);
  CHECK(std::abs(direct - terms) < 1e-12);
}

TEST_CASE("single Wick factor") {
  std::mt19937_64 rng(22);
  const auto f = random_discrete_field(rng, 3, 5, true);
  const CumulantTable t(f);
  CHECK(std::abs(wick_product_expectation(t, {make_sequence({0})}, {})) < 1e-15);
  const cplx mine = wick_product_expectation(t, {make_sequence({0})}, make_sequence({1, 2}));
  const cplx mean0 = oracle::moment(f, make_sequence({0}));
  const cplx direct = oracle::expectation(f, [&](std::size_t a) {
    return (oracle::atom_value(f, a, {0, false}) - mean0) * oracle::atom_value(f, a, {1, false}) *
           oracle::atom_value(f, a, {2, false});
  });
  CHECK(std::abs(mine - direct) < 1e-12);
}

TEST_CASE("restricted expansion equals direct Wick products up to 6 indices") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<std::size_t> groups_d(1, 3), len(1, 3), tail_d(0, 2);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto f = random_discrete_field(rng, 4, 5, trial % 3 == 0);
    const CumulantTable t(f);
    std::vector<IndexSequence> groups;
    std::size_t total = 0;
    const std::size_t L = groups_d(rng);
    for (std::size_t l = 0; l < L && total < 6; ++l) {
      const std::size_t n = std::min(len(rng), 6 - total);
      groups.push_back(random_sequence(rng, 4, n, true));
      total += n;
    }
    const auto tail = random_sequence(rng, 4, std::min(tail_d(rng), 6 - total), true);
    const cplx mine = wick_product_expectation(t, groups, tail);
    const cplx direct = oracle::wick_product(f, groups, tail);
    CHECK(std::abs(mine - direct) < 1e-9);
    ++checked;
  }
  CHECK(checked >= 50);
}

TEST_CASE("generating function check") {
  const FiniteGaussianField g({0}, {0.4}, {{1.7}});
  auto r = generating_check(g, make_sequence({0, 0}), 1e-3, 1e-6);
  CHECK(r.flag);
  CHECK(r.lhs < 1e-6);
  r = generating_check(g, make_sequence({0, 0, 0}), 1e-3, 1e-4);
  CHECK(r.flag);

  const auto bern = bernoulli(0.3);
  r = generating_check(bern, make_sequence({0, 0}), 1e-3, 1e-6);
  CHECK(r.flag);
  CHECK(std::abs(CumulantTable(bern).cumulant(make_sequence({0, 0})) - 0.21) < 1e-15);

  std::mt19937_64 rng(24);
  const auto f = random_discrete_field(rng, 3, 5, true);
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto I = random_sequence(rng, 3, n, false);
    CHECK(generating_check(f, I, 1e-3, n <= 2 ? 1e-6 : 1e-4).flag);
  }

  const BellMoments no_mgf;
  CHECK_THROWS_AS(generating_check(no_mgf, make_sequence({0}), 1e-3), NoGeneratingFunction);
}

TEST_CASE("concurrent cumulant lookups agree with sequential ones") {
  std::mt19937_64 rng(25);
  const auto f = random_discrete_field(rng, 4, 6);
  std::vector<IndexSequence> queries;
  for (int i = 0; i < 40; ++i) queries.push_back(random_sequence(rng, 4, 1 + i % 5, true));
  const CumulantTable shared(f);
  std::vector<std::vector<cplx>> results(4, std::vector<cplx>(queries.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < 4; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t q = 0; q < queries.size(); ++q) results[w][(q + w * 7) % queries.size()] =
          shared.cumulant(queries[(q + w * 7) % queries.size()]);
    });
  for (auto& th : pool) th.join();
  const CumulantTable sequential(f);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const cplx ref = sequential.cumulant(queries[q]);
    for (std::size_t w = 0; w < 4; ++w) CHECK(results[w][q] == ref);
  }
}
