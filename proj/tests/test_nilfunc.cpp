#include <catch2/catch_amalgamated.hpp>

#include "nilcorr/density.hpp"
#include "nilcorr/nilfunc.hpp"
#include "test_helpers.hpp"

using namespace nilcorr;
using namespace nilcorr::testing;

namespace {

PiecewisePoly unit_interval_poly(std::map<MultiIndex, Rational> terms) {
    PiecewisePoly pp(1);
    RatPoly poly(1);
    for (auto& [e, c] : terms) poly.set_term(e, c);
    pp.add_piece(RatBox{{{Rational(0), Rational(1)}}}, poly);
    return pp;
}

} // namespace

TEST_CASE("eval_at: characters and piecewise factors") {
    auto t1 = GroupPresentation::torus(1);
    NilFunction f(t1);
    f.add_character({Int(1)});
    auto q = GroupElement::from_rationals(t1, {Rational(1, 4)});
    CHECK(std::abs(f.eval_at(q) - Complex(0, 1)) < 1e-15);

    NilFunction g(t1);
    g.add_piecewise(unit_interval_poly({{{2}, Rational(1)}}));
    CHECK(g.eval_at(GroupElement::from_rationals(t1, {Rational(1, 2)})).real() ==
          Catch::Approx(0.25));

    auto h3 = GroupPresentation::heisenberg3();
    NilFunction h(h3);
    h.add_character({Int(1), Int(1)});
    for (const Rational& z : {Rational(0), Rational(1, 3), Rational(9, 10)}) {
        auto pt = GroupElement::from_rationals(h3, {Rational(1, 2), Rational(1, 2), z});
        CHECK(std::abs(h.eval_at(pt) - Complex(1, 0)) < 1e-15);
    }
}

TEST_CASE("boundary points resolve to the half-open box") {
    auto t1 = GroupPresentation::torus(1);
    NilFunction f(t1);
    PiecewisePoly pp(1);
    RatPoly left(1), right(1);
    left.set_term({0}, Rational(1));
    right.set_term({0}, Rational(2));
    pp.add_piece(RatBox{{{Rational(0), Rational(1, 2)}}}, left);
    pp.add_piece(RatBox{{{Rational(1, 2), Rational(1)}}}, right);
    f.add_piecewise(pp);
    CHECK(f.eval_at(GroupElement::from_rationals(t1, {Rational(1, 2)})).real() ==
          Catch::Approx(2.0));
}

TEST_CASE("gamma invariance of characters under reduction") {
    auto h3 = GroupPresentation::heisenberg3();
    NilFunction f(h3);
    f.add_character({Int(2), Int(-1)});
    SplitMix64 rng(53);
    for (int t = 0; t < 50; ++t) {
        std::vector<Scalar> c{b1() * Rational(rng.symmetric(5)), Scalar(Rational(rng.symmetric(40), 7)),
                              Scalar(Rational(rng.symmetric(40), 9))};
        GroupElement a(h3, c);
        std::vector<Scalar> g(3);
        for (int i = 0; i < 3; ++i) g[i] = Scalar(Rational(rng.symmetric(4)));
        GroupElement gamma(h3, g);
        Complex v1 = f.eval_at(reduce_mod_lattice(a).q);
        Complex v2 = f.eval_at(reduce_mod_lattice(multiply(a, gamma)).q);
        CHECK(std::abs(v1 - v2) < 1e-12);
    }
}

TEST_CASE("nilsequence: spec examples") {
    auto t1 = GroupPresentation::torus(1);
    NilFunction f(t1);
    f.add_character({Int(1)});
    PolySequence g(t1, 1);
    g.push_factor(GroupElement(t1, {b1()}), IntPolynomial::variable(1, 0));
    auto psi = nilsequence(f, g, GroupElement::identity(t1));
    CHECK(std::abs(psi.eval1(0) - Complex(1, 0)) < 1e-15);
    CHECK(std::abs(psi.eval1(1) - unit_phase(0.41421356237309504880)) < 1e-14);

    // Heisenberg: f = e^{2πix}, g(n) = a^n, a = (β1, β2, 0)
    auto h3 = GroupPresentation::heisenberg3();
    NilFunction fh(h3);
    fh.add_character({Int(1), Int(0)});
    PolySequence gh(h3, 1);
    gh.push_factor(GroupElement(h3, {b1(), b2(), Scalar()}), IntPolynomial::variable(1, 0));
    auto psih = nilsequence(fh, gh, GroupElement::identity(h3));
    for (long long n : {1LL, 7LL, 100LL}) {
        double expect_phase = n * 0.41421356237309504880;
        expect_phase -= std::floor(expect_phase);
        CHECK(std::abs(psih.eval1(Int(n)) - unit_phase(expect_phase)) < 1e-12);
    }

    auto one = NilFunction::constant(t1, Complex(1, 0));
    auto psi1 = nilsequence(one, PolySequence(t1, 1), GroupElement::identity(t1));
    for (long long n : {-9LL, 0LL, 4LL}) CHECK(std::abs(psi1.eval1(Int(n)) - Complex(1, 0)) < 1e-15);
    CHECK(psi1.bound() == Catch::Approx(1.0));
}

TEST_CASE("integrate: characters in closed form") {
    auto t1 = GroupPresentation::torus(1);
    NilFunction f(t1);
    f.add_character({Int(1)});
    CHECK(std::abs(integrate(f, Subnilmanifold::whole(t1))) < 1e-15);

    auto t2 = GroupPresentation::torus(2);
    NilFunction g(t2);
    g.add_character({Int(1), Int(2)});
    auto diag = Subnilmanifold::through_identity(t2, {{Rational(1), Rational(1)}});
    CHECK(std::abs(integrate(g, diag)) < 1e-15);
    // frequency (2, -1) annihilates the diagonal... (2, -2) does
    NilFunction h(t2);
    h.add_character({Int(2), Int(-2)});
    CHECK(std::abs(integrate(h, diag) - Complex(1, 0)) < 1e-15);
    // coset basepoint contributes its phase
    auto coset = diag.translated(GroupElement::from_rationals(t2, {Rational(1, 8), Rational(0)}));
    CHECK(std::abs(integrate(h, coset) - unit_phase(0.25)) < 1e-15);
}

TEST_CASE("integrate: piecewise polynomials over the full cube, exactly") {
    auto t1 = GroupPresentation::torus(1);
    NilFunction f(t1);
    f.add_piecewise(unit_interval_poly({{{2}, Rational(1)}}));
    CHECK(integrate(f, Subnilmanifold::whole(t1)).real() == Catch::Approx(1.0 / 3).epsilon(1e-15));

    // normalized Haar: integrate(1, M) = 1 for assorted M
    auto t2 = GroupPresentation::torus(2);
    auto h3 = GroupPresentation::heisenberg3();
    for (const auto& m : {Subnilmanifold::whole(t2),
                          Subnilmanifold::through_identity(t2, {{Rational(1), Rational(2)}}),
                          Subnilmanifold::point(t2, GroupElement::from_rationals(t2, {Rational(1, 3), Rational(0)}))}) {
        auto one = NilFunction::constant(t2, Complex(1, 0));
        CHECK(std::abs(integrate(one, m) - Complex(1, 0)) < 1e-12);
    }
    auto one_h = NilFunction::constant(h3, Complex(1, 0));
    auto yz = normal_closure(
        Subnilmanifold::through_identity(h3, {{Rational(0), Rational(1), Rational(0)}}));
    CHECK(std::abs(integrate(one_h, yz) - Complex(1, 0)) < 1e-12);
}

TEST_CASE("integrate: mixed character x polynomial via quadrature") {
    auto t1 = GroupPresentation::torus(1);
    NilFunction f(t1);
    NilFunction::Term t;
    t.coeff = Complex(1, 0);
    t.freq = {Int(1)};
    t.pp = unit_interval_poly({{{1}, Rational(1)}});
    f.add_term(std::move(t));
    // ∫₀¹ x e^{2πix} dx = i/(2π)
    Complex expect(0, 1.0 / kTwoPi);
    CHECK(std::abs(integrate(f, Subnilmanifold::whole(t1)) - expect) < 1e-10);
}

TEST_CASE("integrate: piecewise factor over a one-dimensional subtorus") {
    auto t2 = GroupPresentation::torus(2);
    // M = {(t, 2t)}: integrate x² along it; x(t) = t on [0,1)
    NilFunction f(t2);
    NilFunction::Term term;
    term.coeff = Complex(1, 0);
    term.freq = {Int(0), Int(0)};
    PiecewisePoly pp(2);
    RatPoly x2(2);
    x2.set_term({2, 0}, Rational(1));
    pp.add_piece(RatBox{{{Rational(0), Rational(1)}, {Rational(0), Rational(1)}}}, x2);
    term.pp = pp;
    f.add_term(term);
    auto line = Subnilmanifold::through_identity(t2, {{Rational(1), Rational(2)}});
    CHECK(integrate(f, line).real() == Catch::Approx(1.0 / 3).margin(1e-10));
    // and along a shifted copy the x-marginal is unchanged
    auto shifted = line.translated(GroupElement::from_rationals(t2, {Rational(0), Rational(1, 3)}));
    CHECK(integrate(f, shifted).real() == Catch::Approx(1.0 / 3).margin(1e-10));
}

TEST_CASE("translation invariance of Haar") {
    auto t2 = GroupPresentation::torus(2);
    auto line = Subnilmanifold::through_identity(t2, {{Rational(1), Rational(1)}});
    GroupElement a = GroupElement(t2, {b1(), Scalar(Rational(1, 5))});
    NilFunction f(t2);
    f.add_character({Int(1), Int(-1)}, Complex(0.5, 0.25));
    f.add_character({Int(2), Int(-2)});
    // f ∘ (translate by a): characters pick up the phase of a
    NilFunction fa(t2);
    auto tf = tf_coords(a);
    for (const auto& term : f.terms()) {
        Scalar phase;
        for (std::size_t i = 0; i < tf.size(); ++i)
            phase += tf[i] * Scalar(Rational(term.freq[i]));
        fa.add_character(term.freq, term.coeff * unit_phase(scalar_phase_unit(phase)));
    }
    Complex lhs = integrate(fa, line);
    Complex rhs = integrate(f, line.translated(a));
    CHECK(std::abs(lhs - rhs) < 1e-9);
}

TEST_CASE("conditional expectation: torus examples") {
    auto t2 = GroupPresentation::torus(2);
    auto z = Subnilmanifold::through_identity(t2, {{Rational(0), Rational(1)}}, true);
    NilFunction f(t2);
    f.add_character({Int(1), Int(1)});
    CHECK(conditional_expectation(f, z).factor.terms().empty());
    NilFunction g(t2);
    g.add_character({Int(1), Int(0)}, Complex(0, 2));
    auto ce = conditional_expectation(g, z);
    REQUIRE(ce.factor.terms().size() == 1);
    CHECK(ce.quotient->dim() == 1);
    CHECK(ce.factor.terms()[0].freq[0] == 1);
    CHECK(ce.factor.terms()[0].coeff == Complex(0, 2));
}

TEST_CASE("conditional expectation: Heisenberg normal closure of the y-axis") {
    auto h3 = GroupPresentation::heisenberg3();
    auto z = normal_closure(
        Subnilmanifold::through_identity(h3, {{Rational(0), Rational(1), Rational(0)}}));
    NilFunction f(h3);
    f.add_character({Int(1), Int(1)});
    CHECK(conditional_expectation(f, z).factor.terms().empty());
    NilFunction g(h3);
    g.add_character({Int(1), Int(0)});
    auto ce = conditional_expectation(g, z);
    REQUIRE(ce.factor.terms().size() == 1);
    CHECK(ce.quotient->dim() == 1);
}

TEST_CASE("conditional expectation requires a normal factor") {
    auto h3 = GroupPresentation::heisenberg3();
    auto y_axis = Subnilmanifold::through_identity(h3, {{Rational(0), Rational(1), Rational(0)}});
    NilFunction f(h3);
    f.add_character({Int(0), Int(0)});
    CHECK_THROWS_AS(conditional_expectation(f, y_axis), Error);
}

TEST_CASE("conditional expectation: piecewise transport and NotFactorable") {
    auto t2 = GroupPresentation::torus(2);
    auto z = Subnilmanifold::through_identity(t2, {{Rational(0), Rational(1)}}, true);
    // pp in x only, full extent along y: transports
    NilFunction f(t2);
    PiecewisePoly pp(2);
    RatPoly poly(2);
    poly.set_term({2, 0}, Rational(3));
    pp.add_piece(RatBox{{{Rational(0), Rational(1)}, {Rational(0), Rational(1)}}}, poly);
    f.add_piecewise(pp);
    auto ce = conditional_expectation(f, z);
    REQUIRE(ce.factor.terms().size() == 1);
    CHECK(integrate(ce.factor, Subnilmanifold::whole(ce.quotient)).real() == Catch::Approx(1.0));
    // pp varying along y: NotFactorable
    NilFunction g(t2);
    PiecewisePoly bad(2);
    RatPoly ypoly(2);
    ypoly.set_term({0, 1}, Rational(1));
    bad.add_piece(RatBox{{{Rational(0), Rational(1)}, {Rational(0), Rational(1)}}}, ypoly);
    g.add_piecewise(bad);
    CHECK_THROWS_AS(conditional_expectation(g, z), Error);
}

TEST_CASE("tower property: integrate(f, X) = integrate(E(f|Z), X/Z)") {
    auto t2 = GroupPresentation::torus(2);
    auto h3 = GroupPresentation::heisenberg3();
    struct Pair {
        NilFunction f;
        Subnilmanifold z;
    };
    std::vector<Pair> pairs;
    {
        auto z = Subnilmanifold::through_identity(t2, {{Rational(0), Rational(1)}}, true);
        NilFunction f(t2);
        f.add_character({Int(1), Int(0)}, Complex(0.3, -0.1));
        f.add_character({Int(0), Int(0)}, Complex(0.5, 0));
        f.add_character({Int(2), Int(1)});
        pairs.push_back({f, z});
        auto zd = Subnilmanifold::through_identity(t2, {{Rational(1), Rational(1)}}, true);
        NilFunction g(t2);
        g.add_character({Int(1), Int(-1)});
        g.add_character({Int(3), Int(1)}, Complex(0, 1));
        pairs.push_back({g, zd});
    }
    {
        auto z = normal_closure(
            Subnilmanifold::through_identity(h3, {{Rational(0), Rational(1), Rational(0)}}));
        NilFunction f(h3);
        f.add_character({Int(1), Int(0)}, Complex(1, 1));
        f.add_character({Int(0), Int(2)});
        f.add_character({Int(0), Int(0)}, Complex(0.25, 0));
        pairs.push_back({f, z});
    }
    for (const auto& [f, z] : pairs) {
        Complex lhs = integrate(f, Subnilmanifold::whole(f.presentation()));
        auto ce = conditional_expectation(f, z);
        Complex rhs = integrate(ce.factor, Subnilmanifold::whole(ce.quotient));
        CHECK(std::abs(lhs - rhs) < 1e-9);
    }
}

TEST_CASE("alternation: spec example and exactness") {
    auto t1 = GroupPresentation::torus(1);
    NilFunction f(t1);
    f.add_character({Int(1)});
    PolySequence g(t1, 1);
    g.push_factor(GroupElement(t1, {b1()}), IntPolynomial::variable(1, 0));
    auto psi0 = nilsequence(f, g, GroupElement::identity(t1));
    auto psi1 = nilsequence(NilFunction::constant(t1, Complex(1, 0)), PolySequence(t1, 1),
                            GroupElement::identity(t1));
    auto alt = alternate(2, {{{Int(0)}, psi0}, {{Int(1)}, psi1}});
    CHECK(std::abs(alt.eval1(4) - psi0.eval1(2)) < 1e-14);
    CHECK(std::abs(alt.eval1(3) - Complex(1, 0)) < 1e-15);
    // negative indices too: -3 = 2·(-2) + 1
    CHECK(std::abs(alt.eval1(-3) - Complex(1, 0)) < 1e-15);
    CHECK(std::abs(alt.eval1(-4) - psi0.eval1(-2)) < 1e-14);

    // all components equal → ψ(n) = ψ0(⌊n/k⌋)
    auto same = alternate(2, {{{Int(0)}, psi0}, {{Int(1)}, psi0}});
    for (long long n : {0LL, 1LL, 7LL, 10LL, -5LL}) {
        long long m = static_cast<long long>(std::floor(n / 2.0));
        CHECK(std::abs(same.eval1(Int(n)) - psi0.eval1(Int(m))) < 1e-13);
    }

    // k = 1 is the identity
    auto id = alternate(1, {{{Int(0)}, psi0}});
    CHECK(std::abs(id.eval1(5) - psi0.eval1(5)) < 1e-14);
}

TEST_CASE("alternation matches the piecewise definition pointwise (k=3, d=2)") {
    auto t1 = GroupPresentation::torus(1);
    std::vector<std::pair<std::vector<Int>, SequenceHandle>> comps;
    std::vector<SequenceHandle> flat;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            NilFunction f(t1);
            f.add_character({Int(1 + i)}, Complex(1.0 / (1 + j), 0));
            PolySequence g(t1, 2);
            IntPolynomial p(2);
            p.set_term({1, 0}, 1 + j);
            p.set_term({0, 1}, 1);
            g.push_factor(GroupElement(t1, {b1()}), p);
            auto h = nilsequence(f, g, GroupElement::identity(t1));
            comps.push_back({{Int(i), Int(j)}, h});
            flat.push_back(h);
        }
    auto alt = alternate(3, comps);
    SplitMix64 rng(59);
    for (int t = 0; t < 100; ++t) {
        long long n1 = rng.symmetric(500), n2 = rng.symmetric(500);
        long long i = ((n1 % 3) + 3) % 3, j = ((n2 % 3) + 3) % 3;
        long long m1 = (n1 - i) / 3, m2 = (n2 - j) / 3;
        std::vector<Int> n{Int(n1), Int(n2)};
        std::vector<Int> m{Int(m1), Int(m2)};
        Complex direct = flat[static_cast<std::size_t>(3 * i + j)].eval(m);
        CHECK(std::abs(alt.eval(n) - direct) < 1e-13);
    }
}

TEST_CASE("alternation rejects bare handles") {
    SequenceHandle bare(1, 1.0, [](std::span<const Int>) { return Complex(1, 0); });
    CHECK_THROWS_AS(alternate(2, {{{Int(0)}, bare}, {{Int(1)}, bare}}), Error);
    try {
        alternate(2, {{{Int(0)}, bare}, {{Int(1)}, bare}});
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ProvenanceMissing);
    }
}
