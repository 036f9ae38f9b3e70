#include <catch2/catch_amalgamated.hpp>

#include "nilcorr/corr.hpp"
#include "test_helpers.hpp"

using namespace nilcorr;
using namespace nilcorr::testing;

namespace {

NilFunction character(const PresentationPtr& pres, std::vector<long long> freq,
                      Complex coeff = {1, 0}) {
    NilFunction f(pres);
    IntRow m;
    for (auto v : freq) m.emplace_back(v);
    f.add_character(std::move(m), coeff);
    return f;
}

CorrelationSpec rotation_pair_spec(const Scalar& alpha) {
    auto t1 = GroupPresentation::torus(1);
    return CorrelationSpec{MPSystem::torus_rotation({alpha}),
                           {character(t1, {-1}), character(t1, {1})},
                           {IntPolynomial::variable(1, 0)},
                           std::nullopt};
}

CorrelationSpec skew_pair_spec(const Scalar& alpha) {
    auto t2 = GroupPresentation::torus(2);
    return CorrelationSpec{MPSystem::skew_product(alpha),
                           {character(t2, {0, -1}), character(t2, {0, 1})},
                           {IntPolynomial::variable(1, 0)},
                           std::nullopt};
}

} // namespace

TEST_CASE("iterate: closed forms match stepping") {
    auto skew = MPSystem::skew_product(b1());
    auto pt = iterate(skew, 2, {Scalar(Rational(0)), Scalar(Rational(0))});
    CHECK(pt[0] == mod_one(b1() * Rational(2)));
    CHECK(pt[1] == mod_one(b1()));

    auto rot = MPSystem::torus_rotation({b1()});
    CHECK(iterate(rot, -1, {Scalar(Rational(0))})[0] == mod_one(-b1()));
    CHECK(iterate(rot, 0, {Scalar(Rational(1, 7))})[0] == Scalar(Rational(1, 7)));

    auto h3 = GroupPresentation::heisenberg3();
    auto nil = MPSystem::nil_translation(h3, GroupElement(h3, {b1(), Scalar(Rational(1, 2)), Scalar()}));
    SplitMix64 rng(61);
    for (const auto& sys : {skew, rot, nil}) {
        int dim = static_cast<int>(sys.phase_presentation()->dim());
        std::vector<Scalar> x(dim);
        for (int i = 0; i < dim; ++i) x[i] = Scalar(Rational(rng.bounded(10), 11));
        auto stepped = x;
        for (int j = 0; j < 6; ++j) stepped = iterate(sys, 1, std::move(stepped));
        auto direct = iterate(sys, 6, x);
        for (int i = 0; i < dim; ++i) CHECK(stepped[i] == direct[i]);
        // and backwards
        auto back = iterate(sys, -6, direct);
        for (int i = 0; i < dim; ++i) CHECK(back[i] == x[i]);
    }
}

TEST_CASE("correlate: rotation reproduces the phase sequence") {
    auto spec = rotation_pair_spec(b1());
    auto phi = correlate(spec);
    for (long long n : {0LL, 1LL, 25LL, -7LL}) {
        Complex expect = scalar_unit_phase(b1() * Scalar(Rational(n)));
        CHECK(std::abs(phi.eval1(Int(n)) - expect) < 1e-14);
    }
}

TEST_CASE("correlate: skew pair is the delta at zero") {
    auto spec = skew_pair_spec(b1());
    auto phi = correlate(spec);
    CHECK(phi.eval1(0) == Complex(1, 0));
    for (long long n : {1LL, -1LL, 4LL, 999LL}) CHECK(phi.eval1(Int(n)) == Complex(0, 0));
}

TEST_CASE("correlate: constant observables give the constant sequence") {
    auto t2 = GroupPresentation::torus(2);
    CorrelationSpec spec{MPSystem::skew_product(b1()),
                         {NilFunction::constant(t2, Complex(1, 0)),
                          NilFunction::constant(t2, Complex(1, 0))},
                         {IntPolynomial::variable(1, 0)},
                         std::nullopt};
    auto phi = correlate(spec);
    for (long long n : {-3LL, 0LL, 11LL}) CHECK(std::abs(phi.eval1(Int(n)) - Complex(1, 0)) < 1e-15);
}

TEST_CASE("correlate: linearity in each observable and conjugation symmetry") {
    auto t1 = GroupPresentation::torus(1);
    auto sys = MPSystem::torus_rotation({b1()});
    auto p = IntPolynomial::variable(1, 0);
    NilFunction f_sum(t1);
    f_sum.add_character({Int(1)}, Complex(0.5, 0));
    f_sum.add_character({Int(2)}, Complex(0, 1));
    CorrelationSpec combined{sys, {character(t1, {-1}), f_sum}, {p}, std::nullopt};
    CorrelationSpec part1{sys, {character(t1, {-1}), character(t1, {1}, Complex(0.5, 0))}, {p}, std::nullopt};
    CorrelationSpec part2{sys, {character(t1, {-1}), character(t1, {2}, Complex(0, 1))}, {p}, std::nullopt};
    auto phi = correlate(combined);
    auto phi1 = correlate(part1);
    auto phi2 = correlate(part2);
    for (long long n : {0LL, 4LL, -9LL}) {
        Complex lhs = phi.eval1(Int(n));
        Complex rhs = phi1.eval1(Int(n)) + phi2.eval1(Int(n));
        CHECK(std::abs(lhs - rhs) < 1e-14);
    }
    // conjugation: swapping the (f̄, f) pair conjugates the correlation
    CorrelationSpec conj_spec{sys, {character(t1, {1}), character(t1, {-1})}, {p}, std::nullopt};
    auto phic = correlate(conj_spec);
    auto phir = correlate(rotation_pair_spec(b1()));
    for (long long n : {1LL, 13LL}) {
        CHECK(std::abs(phic.eval1(Int(n)) - std::conj(phir.eval1(Int(n)))) < 1e-14);
    }
}

TEST_CASE("correlate: measure preservation of the catalog systems") {
    auto t2 = GroupPresentation::torus(2);
    auto h3 = GroupPresentation::heisenberg3();
    std::vector<std::pair<MPSystem, NilFunction>> cases;
    cases.emplace_back(MPSystem::skew_product(b1()), character(t2, {1, -2}));
    cases.emplace_back(MPSystem::torus_rotation({b1(), b2()}), character(t2, {2, 1}));
    cases.emplace_back(
        MPSystem::nil_translation(h3, GroupElement(h3, {b1(), b2(), Scalar()})),
        character(h3, {1, 1}));
    for (auto& [sys, f] : cases) {
        // ∫ f∘T dμ = ∫ f dμ via the correlation with f0 = 1 and p = 1
        auto pres = sys.phase_presentation();
        IntPolynomial one_poly = IntPolynomial::constant(1, 1);
        CorrelationSpec spec{sys, {NilFunction::constant(pres, Complex(1, 0)), f}, {one_poly}, std::nullopt};
        auto phi = correlate(spec);
        Complex lhs = phi.eval1(0); // the value is ∫ f∘T dμ regardless of n
        Complex rhs = integrate(f, Subnilmanifold::whole(pres));
        CHECK(std::abs(lhs - rhs) < 1e-9);
    }
}

TEST_CASE("correlate path B: piecewise observable via quadrature") {
    auto t1 = GroupPresentation::torus(1);
    NilFunction f0(t1);
    PiecewisePoly pp(1);
    RatPoly x(1);
    x.set_term({1}, Rational(1));
    pp.add_piece(RatBox{{{Rational(0), Rational(1)}}}, x);
    f0.add_piecewise(pp);
    // φ(n) = ∫ x · e^{2πi(x + nα)} dx = e^{2πinα} · i/(2π)
    CorrelationSpec spec{MPSystem::torus_rotation({b1()}), {f0, character(t1, {1})},
                         {IntPolynomial::variable(1, 0)}, std::nullopt};
    auto phi = correlate(spec);
    for (long long n : {0LL, 3LL}) {
        Complex expect = scalar_unit_phase(b1() * Scalar(Rational(n))) * Complex(0, 1.0 / kTwoPi);
        CHECK(std::abs(phi.eval1(Int(n)) - expect) < 1e-7);
    }
}

TEST_CASE("decompose: rotation is purely a nilsequence") {
    auto spec = rotation_pair_spec(b1());
    auto dec = decompose(spec);
    CHECK(dec.report.verdict == DecayVerdict::Null);
    CHECK(dec.reconstruction_max_err < 1e-12);
    REQUIRE(dec.nil_part.nil_provenance());
    for (long long n : {0LL, 1LL, 57LL, -19LL, 10000LL}) {
        Complex expect = scalar_unit_phase(b1() * Scalar(Rational(n)));
        CHECK(std::abs(dec.nil_part.eval1(Int(n)) - expect) < 1e-12);
        CHECK(std::abs(dec.null_part.eval1(Int(n))) < 1e-12);
    }
}

TEST_CASE("decompose: nil part provenance path equals the phase formula") {
    auto spec = rotation_pair_spec(b1());
    auto dec = decompose(spec);
    auto prov = dec.nil_part.nil_provenance();
    REQUIRE(prov);
    for (long long n : {0LL, 3LL, -41LL, 222LL}) {
        Int nn(n);
        GroupElement pt = multiply(prov->g.eval(std::span<const Int>(&nn, 1)), prov->x0);
        Complex via_group = prov->f.eval_at(reduce_mod_lattice(pt).q);
        CHECK(std::abs(via_group - dec.nil_part.eval1(nn)) < 1e-12);
    }
}

TEST_CASE("decompose: skew pair has zero nil part and a delta residual") {
    auto spec = skew_pair_spec(b1());
    auto dec = decompose(spec);
    CHECK(dec.report.verdict == DecayVerdict::Null);
    CHECK(dec.reconstruction_max_err == 0.0);
    for (long long n : {-2LL, 0LL, 1LL, 30LL})
        CHECK(dec.nil_part.eval1(Int(n)) == Complex(0, 0));
    CHECK(dec.null_part.eval1(0) == Complex(1, 0));
    for (long long n : {1LL, -1LL, 17LL}) CHECK(dec.null_part.eval1(Int(n)) == Complex(0, 0));
}

TEST_CASE("decompose: skew with x-reading observables is almost periodic") {
    auto t2 = GroupPresentation::torus(2);
    CorrelationSpec spec{MPSystem::skew_product(b1()),
                         {character(t2, {-1, 0}), character(t2, {1, 0})},
                         {IntPolynomial::variable(1, 0)},
                         std::nullopt};
    auto dec = decompose(spec);
    for (long long n : {0LL, 5LL, -12LL}) {
        Complex expect = scalar_unit_phase(b1() * Scalar(Rational(n)));
        CHECK(std::abs(dec.nil_part.eval1(Int(n)) - expect) < 1e-12);
        CHECK(std::abs(dec.null_part.eval1(Int(n))) < 1e-12);
    }
}

TEST_CASE("decompose: quadratic exponent on a rotation stays exact") {
    auto t1 = GroupPresentation::torus(1);
    IntPolynomial n2 = IntPolynomial::variable(1, 0) * IntPolynomial::variable(1, 0);
    CorrelationSpec spec{MPSystem::torus_rotation({b1()}),
                         {character(t1, {-1}), character(t1, {1})},
                         {n2},
                         std::nullopt};
    auto dec = decompose(spec);
    for (long long n : {0LL, 2LL, 11LL}) {
        Complex expect = scalar_unit_phase(b1() * Scalar(Rational(n * n)));
        CHECK(std::abs(dec.nil_part.eval1(Int(n)) - expect) < 1e-12);
    }
}

TEST_CASE("decompose: convex combinations are memberwise additive") {
    auto s1 = rotation_pair_spec(b1());
    auto s2 = rotation_pair_spec(Scalar(Rational(1, 2)));
    auto mix = MPSystem::convex_combination(
        {{0.25, s1.system}, {0.75, s2.system}});
    CorrelationSpec spec{mix, s1.observables, s1.polynomials, std::nullopt};
    auto dec = decompose(spec);
    auto d1 = decompose(s1);
    auto d2 = decompose(s2);
    for (long long n : {0LL, 1LL, 6LL, -3LL}) {
        Complex expect = 0.25 * d1.nil_part.eval1(Int(n)) + 0.75 * d2.nil_part.eval1(Int(n));
        CHECK(std::abs(dec.nil_part.eval1(Int(n)) - expect) < 1e-12);
        Complex nexpect = 0.25 * d1.null_part.eval1(Int(n)) + 0.75 * d2.null_part.eval1(Int(n));
        CHECK(std::abs(dec.null_part.eval1(Int(n)) - nexpect) < 1e-12);
    }
}

TEST_CASE("decompose: rational rotation goes through the periodic structure") {
    auto spec = rotation_pair_spec(Scalar(Rational(1, 2)));
    auto dec = decompose(spec);
    CHECK(dec.orbit_cosets == 2);
    for (long long n : {0LL, 1LL, 2LL, 3LL, 9LL}) {
        Complex expect = (n % 2 == 0) ? Complex(1, 0) : Complex(-1, 0);
        CHECK(dec.nil_part.eval1(Int(n)) == expect);
        CHECK(std::abs(dec.null_part.eval1(Int(n))) < 1e-15);
    }
}

TEST_CASE("decompose: family grids split atoms from quadrature dust") {
    auto t1 = GroupPresentation::torus(1);
    std::vector<std::pair<double, MPSystem>> members;
    const int grid = 400;
    for (int j = 0; j < grid; ++j)
        members.emplace_back(1.0 / grid, MPSystem::torus_rotation({Scalar(Rational(j, grid))}));
    CorrelationSpec spec{MPSystem::parametrized_family(members),
                         {character(t1, {-1}), character(t1, {1})},
                         {IntPolynomial::variable(1, 0)},
                         std::nullopt};
    DecomposeOptions opt;
    opt.schedule = {50, 400};
    auto dec = decompose(spec, opt);
    for (long long n : {3LL, 17LL}) CHECK(std::abs(dec.nil_part.eval1(Int(n))) < 1e-13);
    CHECK(std::abs(dec.null_part.eval1(0) - Complex(1, 0)) < 1e-12);
    CHECK(std::abs(dec.null_part.eval1(grid) - Complex(1, 0)) < 1e-12);
    CHECK(dec.report.verdict == DecayVerdict::Null);

    // atomic family: a single δ member keeps its nilsequence exactly
    CorrelationSpec atom{MPSystem::parametrized_family(
                             {{1.0, MPSystem::torus_rotation({Scalar(Rational(1, 2))})}}),
                         spec.observables,
                         spec.polynomials,
                         std::nullopt};
    auto adec = decompose(atom);
    for (long long n : {0LL, 1LL, 8LL, 13LL})
        CHECK(adec.nil_part.eval1(Int(n)) == ((n % 2 == 0) ? Complex(1, 0) : Complex(-1, 0)));
}

TEST_CASE("decompose: windowed orthogonality against finitely supported residuals") {
    // skew pair: null part is the delta at 0; outside its support,
    // |nil + null| ≥ |nil| holds with equality
    auto dec = decompose(skew_pair_spec(b1()));
    for (long long n = 1; n <= 50; ++n) {
        double lhs = std::abs(dec.nil_part.eval1(Int(n)) + dec.null_part.eval1(Int(n)));
        double rhs = std::abs(dec.nil_part.eval1(Int(n)));
        CHECK(lhs >= rhs - 1e-15);
    }
    // and a rotation pair (null ≡ 0): sup over any window matches exactly
    auto rdec = decompose(rotation_pair_spec(b1()));
    double wmax_sum = 0, wmax_nil = 0;
    for (long long n = -25; n <= 25; ++n) {
        wmax_sum = std::max(wmax_sum,
                            std::abs(rdec.nil_part.eval1(Int(n)) + rdec.null_part.eval1(Int(n))));
        wmax_nil = std::max(wmax_nil, std::abs(rdec.nil_part.eval1(Int(n))));
    }
    CHECK(wmax_sum >= wmax_nil - 1e-15);
}

TEST_CASE("decompose rejects piecewise observables") {
    auto t1 = GroupPresentation::torus(1);
    NilFunction f0(t1);
    PiecewisePoly pp(1);
    RatPoly x(1);
    x.set_term({1}, Rational(1));
    pp.add_piece(RatBox{{{Rational(0), Rational(1)}}}, x);
    f0.add_piecewise(pp);
    CorrelationSpec spec{MPSystem::torus_rotation({b1()}), {f0, character(t1, {1})},
                         {IntPolynomial::variable(1, 0)}, std::nullopt};
    try {
        decompose(spec);
        FAIL("expected UnsupportedObservable");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnsupportedObservable);
    }
}

TEST_CASE("birkhoff check: rotation and skew") {
    auto t1 = GroupPresentation::torus(1);
    auto t2 = GroupPresentation::torus(2);
    CHECK(birkhoff_check(MPSystem::torus_rotation({b1()}), character(t1, {1}), 10000) < 1e-3);
    CHECK(birkhoff_check(MPSystem::torus_rotation({b1()}),
                         NilFunction::constant(t1, Complex(1, 0)), 100) == Catch::Approx(0.0));
    CHECK(birkhoff_check(MPSystem::skew_product(b1()), character(t2, {0, 1}), 20000) < 0.05);
}

TEST_CASE("d=2 multiparameter correlation and decomposition") {
    auto t1 = GroupPresentation::torus(1);
    IntPolynomial p1 = IntPolynomial::variable(2, 0);                          // n1
    IntPolynomial p2 = IntPolynomial::variable(2, 0) + IntPolynomial::variable(2, 1); // n1+n2
    CorrelationSpec spec{MPSystem::torus_rotation({b1()}),
                         {character(t1, {-2}), character(t1, {1}), character(t1, {1})},
                         {p1, p2},
                         std::nullopt};
    auto phi = correlate(spec);
    auto dec = decompose(spec);
    SplitMix64 rng(67);
    for (int t = 0; t < 40; ++t) {
        std::vector<Int> n{Int(rng.symmetric(50)), Int(rng.symmetric(50))};
        Complex expect = scalar_unit_phase(b1() * Scalar(Rational(n[0] + n[0] + n[1])));
        CHECK(std::abs(phi.eval(n) - expect) < 1e-13);
        CHECK(std::abs(dec.nil_part.eval(n) - expect) < 1e-12);
        CHECK(std::abs(dec.null_part.eval(n)) < 1e-12);
    }
}
