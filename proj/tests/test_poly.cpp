#include "doctest.h"

#include <cmath>

#include "msos/json_io.hpp"
#include "msos/poly.hpp"
#include "test_util.hpp"

using namespace msos;

TEST_CASE("monomial basis matches the graded lex ladder") {
    const auto b = monomial_basis(2, 2);
    REQUIRE(b.size() == 6);
    CHECK(b[0].exponents == std::vector<int>{0, 0});
    CHECK(b[1].exponents == std::vector<int>{1, 0});
    CHECK(b[2].exponents == std::vector<int>{0, 1});
    CHECK(b[3].exponents == std::vector<int>{2, 0});
    CHECK(b[4].exponents == std::vector<int>{1, 1});
    CHECK(b[5].exponents == std::vector<int>{0, 2});

    for (int n = 1; n <= 3; ++n) {
        const auto b0 = monomial_basis(n, 0);
        REQUIRE(b0.size() == 1);
        CHECK(b0[0].degree() == 0);
    }

    const auto u = monomial_basis(1, 4);
    REQUIRE(u.size() == 5);
    for (int k = 0; k < 5; ++k) CHECK(u[k].exponents == std::vector<int>{k});
}

TEST_CASE("monomial basis is strictly increasing with binomial length") {
    for (int n = 1; n <= 4; ++n)
        for (int d = 0; d <= 8; ++d) {
            const auto b = monomial_basis(n, d);
            CHECK(static_cast<std::int64_t>(b.size()) == binomial(n + d, n));
            for (std::size_t i = 0; i + 1 < b.size(); ++i) {
                CHECK(graded_lex_less(b[i], b[i + 1]));
                CHECK(!graded_lex_less(b[i + 1], b[i]));
            }
        }
}

TEST_CASE("evaluation") {
    const Polynomial f = testutil::linear_objective({3.0, 0.5, -2.0});
    CHECK(f.evaluate(Point{{2.0, 2.0}}) == doctest::Approx(3.0 + 1.0 - 4.0));

    const Polynomial zero(2);
    CHECK(zero.evaluate(Point{{1.5, -7.0}}) == 0.0);
    CHECK(zero.degree() == 0);

    // g1 of the four-point variety vanishes at (2,2)
    const Polynomial g1 =
        Polynomial::from_terms(2, {{{0, 1}, 2.0}, {{0, 2}, -2.0}, {{1, 1}, 1.0}});
    CHECK(g1.evaluate(Point{{2.0, 2.0}}) == doctest::Approx(0.0));

    CHECK_THROWS_AS(f.evaluate(Point{{1.0}}), std::invalid_argument);
}

TEST_CASE("multiplication") {
    const Polynomial s = Polynomial::from_terms(2, {{{1, 0}, 1.0}, {{0, 1}, 1.0}});
    const Polynomial sq = s.multiply(s);
    CHECK(sq.coefficient(Monomial{{2, 0}}) == 1.0);
    CHECK(sq.coefficient(Monomial{{1, 1}}) == 2.0);
    CHECK(sq.coefficient(Monomial{{0, 2}}) == 1.0);
    CHECK(sq.degree() == 2);

    const Polynomial one = Polynomial::constant(2, 1.0);
    const Polynomial p = Polynomial::from_terms(2, {{{2, 1}, -3.0}, {{0, 0}, 2.0}});
    CHECK(p.multiply(one).terms() == p.terms());
    CHECK(p.multiply(Polynomial(2)).is_zero());
}

TEST_CASE("add_scaled") {
    const Polynomial p = Polynomial::from_terms(2, {{{1, 1}, 4.0}, {{0, 0}, -1.0}});
    CHECK(p.add_scaled(1.0, p.negate()).is_zero());

    const Polynomial f = testutil::linear_objective({0.0, 1.0, 1.0});
    const Polynomial shifted = f.add_scaled(-2.5, Polynomial::constant(2, 1.0));
    CHECK(shifted.coefficient(Monomial::constant(2)) == -2.5);
    CHECK(shifted.coefficient(Monomial{{1, 0}}) == 1.0);

    const Polynomial r = Polynomial(2).add_scaled(2.0, Polynomial::variable(2, 0));
    CHECK(r.coefficient(Monomial{{1, 0}}) == 2.0);
    CHECK(r.terms().size() == 1);
}

TEST_CASE("product evaluation round trip on random data") {
    testutil::Rng rng(12345);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = rng.uniform_int(1, 3);
        auto random_poly = [&]() {
            Polynomial p(n);
            const auto basis = monomial_basis(n, 3);
            for (const auto& m : basis)
                if (rng.uniform(0.0, 1.0) < 0.4) p.add_term(m, rng.uniform(-2.0, 2.0));
            return p;
        };
        const Polynomial p = random_poly(), q = random_poly();
        Point x;
        for (int i = 0; i < n; ++i) x.coords.push_back(rng.uniform(-1.5, 1.5));
        const double lhs = p.multiply(q).evaluate(x);
        const double rhs = p.evaluate(x) * q.evaluate(x);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

        const double a = rng.uniform(-3.0, 3.0);
        const double s1 = p.add_scaled(a, q).evaluate(x);
        const double s2 = p.evaluate(x) + a * q.evaluate(x);
        CHECK(s1 == doctest::Approx(s2).epsilon(1e-12));
    }
}

TEST_CASE("degree bookkeeping prunes cancelled terms") {
    Polynomial p(2);
    p.add_term(Monomial{{3, 1}}, 2.0);
    CHECK(p.degree() == 4);
    p.add_term(Monomial{{3, 1}}, -2.0);
    CHECK(p.is_zero());
    CHECK(p.degree() == 0);
}

TEST_CASE("polynomial JSON round trip sums duplicate exponents") {
    const std::string text =
        R"({"n": 2, "terms": [{"exp": [1, 0], "coef": 2.0}, {"exp": [1, 0], "coef": 0.5},
                              {"exp": [0, 2], "coef": -1.25}]})";
    const Polynomial p = parse_polynomial_json(text);
    CHECK(p.coefficient(Monomial{{1, 0}}) == 2.5);
    CHECK(p.coefficient(Monomial{{0, 2}}) == -1.25);

    const Polynomial q = parse_polynomial_json(polynomial_to_json(p));
    CHECK(q.terms() == p.terms());
}
