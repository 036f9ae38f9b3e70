#include <catch2/catch_amalgamated.hpp>

#include "nilcorr/intpoly.hpp"
#include "nilcorr/density.hpp"

using namespace nilcorr;

namespace {
Int at1(const IntPolynomial& p, long long n) {
    Int nn(n);
    return p.eval(std::span<const Int>(&nn, 1));
}
} // namespace

TEST_CASE("binomial basis evaluation") {
    IntPolynomial p(1);
    p.set_term({2}, 1); // C(n,2)
    CHECK(at1(p, 3) == 3);
    CHECK(at1(p, -2) == 3); // C(-2,2) = (-2)(-3)/2
    IntPolynomial zero(1);
    for (long long n : {-5LL, 0LL, 11LL}) CHECK(at1(zero, n) == 0);
}

TEST_CASE("n1*n2 via monomial conversion") {
    std::map<MultiIndex, Rational> mono{{{1, 1}, Rational(1)}};
    auto p = IntPolynomial::from_monomials(2, mono);
    std::vector<Int> n{Int(2), Int(3)};
    CHECK(p.eval(n) == 6);
    // the binomial form is C(n1,1)·C(n2,1)
    REQUIRE(p.terms().size() == 1);
    CHECK(p.terms().begin()->first == MultiIndex{1, 1});
}

TEST_CASE("monomial round trip is the identity") {
    SplitMix64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        IntPolynomial p(2);
        for (int t = 0; t < 4; ++t) {
            MultiIndex idx{static_cast<std::uint32_t>(rng.bounded(3)),
                           static_cast<std::uint32_t>(rng.bounded(3))};
            p.add_term(idx, Int(rng.symmetric(9)));
        }
        auto back = IntPolynomial::from_monomials(2, p.to_monomials());
        CHECK(back == p);
    }
}

TEST_CASE("non-integral monomials are rejected") {
    std::map<MultiIndex, Rational> mono{{{1}, Rational(1, 3)}};
    CHECK_THROWS_AS(IntPolynomial::from_monomials(1, mono), Error);
    // but n(n+1)/2 is integer-valued
    std::map<MultiIndex, Rational> tri{{{2}, Rational(1, 2)}, {{1}, Rational(1, 2)}};
    auto p = IntPolynomial::from_monomials(1, tri);
    CHECK(at1(p, 4) == 10);
}

TEST_CASE("rational-argument evaluation") {
    IntPolynomial p(1);
    p.set_term({2}, 1);
    Rational half(1, 2);
    CHECK(p.eval_rational(std::span<const Rational>(&half, 1)) == Rational(-1, 8));
}

TEST_CASE("compose_affine: p(l·m + i)") {
    IntPolynomial p(1);
    p.set_term({2}, 2);
    p.set_term({1}, 1); // n² in binomial form
    auto q = p.compose_affine(Int(3), {Int(2)});
    for (long long m : {-3LL, 0LL, 1LL, 7LL}) CHECK(at1(q, m) == at1(p, 3 * m + 2));
}

TEST_CASE("product of polynomials") {
    IntPolynomial n(1);
    n.set_term({1}, 1);
    auto sq = n * n;
    for (long long v : {-4LL, 0LL, 9LL}) CHECK(at1(sq, v) == v * v);
}
