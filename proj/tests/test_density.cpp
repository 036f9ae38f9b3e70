#include <catch2/catch_amalgamated.hpp>

#include "nilcorr/density.hpp"
#include "nilcorr/nilfunc.hpp"
#include "test_helpers.hpp"

using namespace nilcorr;
using namespace nilcorr::testing;

namespace {

SequenceHandle constant_one() {
    return SequenceHandle(1, 1.0, [](std::span<const Int>) { return Complex(1, 0); });
}

SequenceHandle squares_indicator() {
    return SequenceHandle(1, 1.0, [](std::span<const Int> n) {
        if (n[0] < 0) return Complex(0, 0);
        Int r = boost::multiprecision::sqrt(n[0]);
        return (r * r == n[0]) ? Complex(1, 0) : Complex(0, 0);
    });
}

SequenceHandle rotation_phase() {
    auto t1 = GroupPresentation::torus(1);
    NilFunction f(t1);
    f.add_character({Int(1)});
    PolySequence g(t1, 1);
    g.push_factor(GroupElement(t1, {b1()}), IntPolynomial::variable(1, 0));
    return nilsequence(f, g, GroupElement::identity(t1));
}

} // namespace

TEST_CASE("box averages: constants, phases, counts") {
    CHECK(box_average(constant_one(), FolnerBox{{Int(0)}, 50}, AverageMode::Abs).real() ==
          Catch::Approx(1.0));

    // geometric sum bound for e^{2πinβ}: |avg| ≤ 1/(N·2‖β‖)
    auto rot = rotation_phase();
    Complex avg = box_average(rot, FolnerBox{{Int(0)}, 10000}, AverageMode::Plain);
    CHECK(std::abs(avg) < 1e-3);
    // the closed-form geometric sum agrees
    Complex q = unit_phase(0.41421356237309504880);
    Complex geo = (std::pow(q, 10000) - Complex(1, 0)) / (q - Complex(1, 0));
    CHECK(std::abs(avg - geo / 10000.0) < 1e-9);

    // squares: ⌈√N⌉/N at N=100 → 0.1
    Complex sq = box_average(squares_indicator(), FolnerBox{{Int(0)}, 100}, AverageMode::Abs);
    CHECK(sq.real() == Catch::Approx(0.1));
}

TEST_CASE("box average linearity and exactness for finite support") {
    auto spike = SequenceHandle(1, 2.0, [](std::span<const Int> n) {
        return n[0] == 3 ? Complex(2, 0) : Complex(0, 0);
    });
    Complex plain = box_average(spike, FolnerBox{{Int(0)}, 10}, AverageMode::Plain);
    CHECK(plain.real() == Catch::Approx(0.2));
    auto sum = spike + spike;
    CHECK(box_average(sum, FolnerBox{{Int(0)}, 10}, AverageMode::Plain).real() ==
          Catch::Approx(0.4));
    // bounded sequences give averages within [0, B]
    Complex a = box_average(spike, FolnerBox{{Int(-100)}, 300}, AverageMode::Abs);
    CHECK(a.real() >= 0.0);
    CHECK(a.real() <= 2.0);
}

TEST_CASE("multiparameter boxes") {
    auto s = SequenceHandle(2, 1.0, [](std::span<const Int> n) {
        return (n[0] + n[1]) % 2 == 0 ? Complex(1, 0) : Complex(0, 0);
    });
    Complex avg = box_average(s, FolnerBox{{Int(0), Int(0)}, 10}, AverageMode::Abs);
    CHECK(avg.real() == Catch::Approx(0.5));
}

TEST_CASE("null diagnostic verdicts") {
    BasesSpec bases;
    bases.random_count = 4;
    bases.max_magnitude = 100000;
    bases.seed = 5;

    auto rep_sq = null_diagnostic(squares_indicator(), {100, 1000, 10000}, bases);
    CHECK(rep_sq.verdict == DecayVerdict::Null);
    CHECK(rep_sq.worst_avg.front() >= rep_sq.worst_avg.back());

    auto rep_one = null_diagnostic(constant_one(), {100, 1000}, bases);
    CHECK(rep_one.verdict == DecayVerdict::NotNull);

    // |e^{2πinβ}| ≡ 1, so the abs average says not-null; the plain-average
    // magnitude decays at the geometric-sum rate.
    auto rep_rot_abs = null_diagnostic(rotation_phase(), {100, 1000, 10000}, bases);
    CHECK(rep_rot_abs.verdict == DecayVerdict::NotNull);
    auto rep_rot = null_diagnostic(rotation_phase(), {100, 1000, 10000}, bases, 0.05,
                                   AverageMode::Plain);
    CHECK(rep_rot.verdict == DecayVerdict::Null);
}

TEST_CASE("base invariance for genuinely null sequences") {
    BasesSpec bases;
    bases.random_count = 6;
    bases.max_magnitude = 1000000;
    bases.seed = 11;
    auto rep = null_diagnostic(squares_indicator(), {1000, 10000}, bases);
    CHECK(rep.verdict == DecayVerdict::Null);
    BasesSpec zero_only;
    zero_only.random_count = 0;
    auto rep0 = null_diagnostic(squares_indicator(), {1000, 10000}, zero_only);
    CHECK(rep0.verdict == DecayVerdict::Null);
}

TEST_CASE("pointwise averages of null families stay null") {
    // finite family of null sequences: shifted square indicators
    std::vector<SequenceHandle> members;
    for (int m = 0; m < 4; ++m) {
        members.push_back(SequenceHandle(1, 1.0, [m](std::span<const Int> n) {
            Int v = n[0] + m;
            if (v < 0) return Complex(0, 0);
            Int r = boost::multiprecision::sqrt(v);
            return (r * r == v) ? Complex(1, 0) : Complex(0, 0);
        }));
    }
    SequenceHandle avg = Complex(0.25, 0) * members[0];
    for (std::size_t i = 1; i < members.size(); ++i) avg = avg + Complex(0.25, 0) * members[i];
    BasesSpec bases;
    bases.random_count = 3;
    bases.seed = 3;
    auto rep = null_diagnostic(avg, {1000, 10000}, bases);
    CHECK(rep.verdict == DecayVerdict::Null);
}

TEST_CASE("deterministic given a seed") {
    BasesSpec bases;
    bases.seed = 42;
    auto r1 = null_diagnostic(rotation_phase(), {100, 1000}, bases);
    auto r2 = null_diagnostic(rotation_phase(), {100, 1000}, bases);
    CHECK(r1.worst_avg == r2.worst_avg);
    CHECK(r1.bases_used == r2.bases_used);
}

TEST_CASE("schedule validation") {
    BasesSpec bases;
    CHECK_THROWS_AS(null_diagnostic(constant_one(), {}, bases), Error);
    CHECK_THROWS_AS(null_diagnostic(constant_one(), {100, 10}, bases), Error);
}
