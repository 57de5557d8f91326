#include <doctest.h>

#include "detfree/modular.hpp"
#include "detfree/polynomial.hpp"

using namespace detfree;

namespace {

PolyQ var_poly(int v) {
    return PolyQ(RationalDomain{}, {{Monomial::variable(v), mpq_class(1)}});
}

PolyQ random_poly(std::uint64_t& rng, int nvars, int max_deg, int terms) {
    std::vector<PolyQ::Term> ts;
    for (int t = 0; t < terms; ++t) {
        std::vector<int> exps(static_cast<std::size_t>(nvars), 0);
        int deg = static_cast<int>(splitmix64(rng) % static_cast<std::uint64_t>(max_deg + 1));
        for (int i = 0; i < deg; ++i) exps[splitmix64(rng) % static_cast<std::uint64_t>(nvars)] += 1;
        long c = static_cast<long>(splitmix64(rng) % 19) - 9;
        if (c == 0) c = 1;
        ts.emplace_back(Monomial::from_exponents(exps), mpq_class(c));
    }
    return PolyQ(RationalDomain{}, std::move(ts));
}

}  // namespace

TEST_CASE("monomial counts match binomial coefficients") {
    const unsigned long long expected[] = {1, 15, 120, 680, 3060, 11628, 38760};
    for (int d = 0; d <= 6; ++d) {
        CHECK(monomial_count(15, d) == expected[d]);
        if (d <= 3) CHECK(monomials_of_degree(15, d).size() == expected[d]);
    }
    CHECK(monomials_of_degree(15, 3).size() == 680);
}

TEST_CASE("grevlex is a strict total order with cached degrees") {
    auto mons = monomials_of_degree(15, 3);
    for (std::size_t i = 1; i < mons.size(); ++i) {
        CHECK(grevlex_greater(mons[i - 1], mons[i]));
        CHECK_FALSE(grevlex_greater(mons[i], mons[i - 1]));
    }
    for (const auto& m : mons) CHECK(m.degree() == 3);
}

TEST_CASE("binomial identity (x1 + y1)^2") {
    PolyQ s = var_poly(0) + var_poly(5);
    PolyQ sq = s * s;
    CHECK(sq.term_count() == 3);
    CHECK(sq.degree() == 2);
    // x1^2 + 2 x1 y1 + y1^2
    PolyQ expected(RationalDomain{}, {
        {Monomial::variable(0, 2), mpq_class(1)},
        {Monomial::variable(0) * Monomial::variable(5), mpq_class(2)},
        {Monomial::variable(5, 2), mpq_class(1)},
    });
    CHECK(sq == expected);
}

TEST_CASE("additive inverse cancels to the empty polynomial") {
    std::uint64_t rng = 7;
    for (int i = 0; i < 50; ++i) {
        PolyQ a = random_poly(rng, 15, 3, 5);
        PolyQ z = a - a;
        CHECK(z.is_zero());
        CHECK(z.term_count() == 0);
    }
}

TEST_CASE("ring axioms on random sparse inputs") {
    std::uint64_t rng = 11;
    for (int i = 0; i < 200; ++i) {
        PolyQ a = random_poly(rng, 15, 2, 4);
        PolyQ b = random_poly(rng, 15, 2, 4);
        PolyQ c = random_poly(rng, 15, 2, 4);
        CHECK((a + b) + c == a + (b + c));
        CHECK(a * b == b * a);
        CHECK((a * b) * c == a * (b * c));
        CHECK(a * (b + c) == a * b + a * c);
    }
}

TEST_CASE("partial derivative: power rule and linearity") {
    PolyQ x1 = var_poly(0);
    PolyQ cube = x1 * x1 * x1;
    PolyQ d = partial_derivative(cube, 0);
    PolyQ expected(RationalDomain{}, {{Monomial::variable(0, 2), mpq_class(3)}});
    CHECK(d == expected);
    CHECK(partial_derivative(cube, 4).is_zero());

    std::uint64_t rng = 13;
    for (int i = 0; i < 200; ++i) {
        PolyQ a = random_poly(rng, 15, 3, 4);
        PolyQ b = random_poly(rng, 15, 3, 4);
        int v = static_cast<int>(splitmix64(rng) % 15);
        CHECK(partial_derivative(a * b, v) ==
              a * partial_derivative(b, v) + b * partial_derivative(a, v));
    }
}

TEST_CASE("exact division recovers the quotient and rejects non-multiples") {
    std::uint64_t rng = 17;
    for (int i = 0; i < 200; ++i) {
        PolyQ q = random_poly(rng, 15, 2, 3);
        PolyQ f = random_poly(rng, 15, 2, 3);
        if (f.is_zero()) continue;
        auto back = exact_divide(q * f, f);
        REQUIRE(back.has_value());
        CHECK(*back == q);
    }
    // x1*y2 - x2*y1 is not divisible by x1
    PolyQ g = var_poly(0) * var_poly(6) - var_poly(1) * var_poly(5);
    CHECK_FALSE(exact_divide(g, var_poly(0)).has_value());
    CHECK_THROWS_AS(exact_divide(g, PolyQ(RationalDomain{})), std::invalid_argument);
}

TEST_CASE("evaluation is a ring homomorphism") {
    std::uint64_t rng = 23;
    for (int i = 0; i < 200; ++i) {
        PolyQ a = random_poly(rng, 15, 2, 4);
        PolyQ b = random_poly(rng, 15, 2, 4);
        std::vector<mpq_class> point;
        for (int v = 0; v < 15; ++v) point.emplace_back(static_cast<long>(splitmix64(rng) % 11) - 5);
        CHECK(evaluate(a * b, point, 15) == evaluate(a, point, 15) * evaluate(b, point, 15));
        CHECK(evaluate(a + b, point, 15) == evaluate(a, point, 15) + evaluate(b, point, 15));
    }
}

TEST_CASE("prime field arithmetic") {
    CHECK(is_prime_u64(2305843009213693951ULL));  // 2^61 - 1
    CHECK_FALSE(is_prime_u64(2305843009213693953ULL));
    std::uint64_t rng = 29;
    std::uint64_t p = random_prime(62, rng);
    CHECK(is_prime_u64(p));
    CHECK(p >= (1ULL << 61));
    PrimeField F(p);
    for (int i = 0; i < 200; ++i) {
        std::uint64_t a = splitmix64(rng) % p;
        if (!a) continue;
        CHECK(F.mul(a, F.inv(a)) == 1);
        auto s = F.scale(a);
        std::uint64_t b = splitmix64(rng) % p;
        CHECK(F.mul_scaled(s, b) == F.mul(a, b));
    }
}

TEST_CASE("tagged prime-field elements reject mixed moduli") {
    Zp a(3, 101);
    Zp b(5, 103);
    CHECK_THROWS_AS((void)(a + b), DomainMismatchError);
    PolyP pa(PrimeDomain{101}, {{Monomial::one(), Zp(1, 101)}});
    PolyP pb(PrimeDomain{103}, {{Monomial::one(), Zp(2, 103)}});
    CHECK_THROWS_AS((void)(pa + pb), DomainMismatchError);
}

TEST_CASE("chinese remaindering and rational reconstruction") {
    auto [v, m] = crt_combine({{2, 3}, {3, 5}});
    CHECK(v == 8);
    CHECK(m == 15);
    CHECK_THROWS_AS(crt_combine({{1, 6}, {2, 10}}), std::invalid_argument);

    // residue of 1/2 mod 7 is 4
    auto half = rational_reconstruct(mpz_class(4), mpz_class(7));
    REQUIRE(half.has_value());
    CHECK(*half == mpq_class(1, 2));

    // a paper-sized constant through two 62-bit primes
    std::uint64_t rng = 31;
    std::uint64_t p1 = random_prime(62, rng), p2 = random_prime(62, rng);
    auto lifted = lift_rational({{9375 % p1, p1}, {9375 % p2, p2}});
    REQUIRE(lifted.has_value());
    CHECK(*lifted == mpq_class(9375));

    // negative values reconstruct too
    PrimeField F1(p1), F2(p2);
    auto neg = lift_rational({{F1.neg(9375 % p1), p1}, {F2.neg(9375 % p2), p2}});
    REQUIRE(neg.has_value());
    CHECK(*neg == mpq_class(-9375));
}

TEST_CASE("reduce mod p commutes with evaluation") {
    std::uint64_t rng = 37;
    std::uint64_t p = random_prime(62, rng);
    PrimeField F(p);
    for (int i = 0; i < 100; ++i) {
        PolyQ a = random_poly(rng, 15, 3, 5);
        std::vector<std::uint64_t> pt(15);
        for (auto& x : pt) x = splitmix64(rng) % p;
        PolyP ap = reduce_mod(a, p);
        std::vector<Zp> ptz;
        for (auto x : pt) ptz.emplace_back(x, p);
        Zp direct = evaluate(ap, ptz, 15);
        CHECK(direct.v == evaluate_mod(a, F, pt, 15));
    }
}
