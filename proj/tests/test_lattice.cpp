#include <catch2/catch_amalgamated.hpp>

#include "nilcorr/intlinalg.hpp"
#include "test_helpers.hpp"

using namespace nilcorr;
using nilcorr::testing::default_basis;

namespace {
IntMat mat(std::initializer_list<std::initializer_list<long long>> rows) {
    IntMat m;
    for (const auto& r : rows) {
        IntRow row;
        for (auto v : r) row.emplace_back(v);
        m.push_back(std::move(row));
    }
    return m;
}
} // namespace

TEST_CASE("hermite normal form basics") {
    IntMat m = mat({{2, 4, 4}, {-6, 6, 12}, {10, 4, 16}});
    hnf_rows(m);
    // pivots positive, entries above reduced
    REQUIRE(m.size() == 3);
    CHECK(m[0][0] > 0);
    CHECK(m[1][0] == 0);
}

TEST_CASE("integer kernel") {
    // kernel of [1 2 3] is rank 2
    IntMat k = kernel_int(mat({{1, 2, 3}}), 3);
    REQUIRE(k.size() == 2);
    for (const auto& v : k) CHECK(v[0] + 2 * v[1] + 3 * v[2] == 0);
    // kernel of identity is empty
    CHECK(kernel_int(mat({{1, 0}, {0, 1}}), 2).empty());
    // kernel of empty constraint set is everything
    CHECK(kernel_int({}, 3).size() == 3);
}

TEST_CASE("smith invariants") {
    auto inv = snf_invariants(mat({{2, 4, 4}, {-6, 6, 12}, {10, 4, 16}}));
    REQUIRE(inv.size() == 3);
    CHECK(inv[0] == 2);
    CHECK(inv[1] == 2);
    CHECK(inv[2] == 156);
    auto inv2 = snf_invariants(mat({{0, 2}}));
    REQUIRE(inv2.size() == 1);
    CHECK(inv2[0] == 2);
}

TEST_CASE("saturation and annihilator") {
    // span{(1/2, 1/2)}: saturated lattice is generated by (1,1)
    RatMat span{{Rational(1, 2), Rational(1, 2)}};
    IntMat sat = saturate_span(span, 2);
    REQUIRE(sat.size() == 1);
    CHECK(sat[0][0] == 1);
    CHECK(sat[0][1] == 1);
    IntMat ann = annihilator_lattice(span, 2);
    REQUIRE(ann.size() == 1);
    CHECK(ann[0][0] + ann[0][1] == 0);
}

TEST_CASE("relation lattice over scalars") {
    auto basis = default_basis();
    // alpha = (β1, 1/2): relations generated by (0, 2)
    IntMat rel = relation_lattice({{Scalar::basis_element(basis, 0), Scalar(Rational(1, 2))}}, 2);
    REQUIRE(rel.size() == 1);
    CHECK(rel[0][0] == 0);
    CHECK(boost::multiprecision::abs(rel[0][1]) == 2);
    // alpha = β1: no relations
    CHECK(relation_lattice({{Scalar::basis_element(basis, 0)}}, 1).empty());
    // alpha = 1/3: relations 3ℤ
    IntMat rel3 = relation_lattice({{Scalar(Rational(1, 3))}}, 1);
    REQUIRE(rel3.size() == 1);
    CHECK(boost::multiprecision::abs(rel3[0][0]) == 3);
    // two rationally dependent irrationals: β1 and 2β1 + 1/2
    IntMat rel4 = relation_lattice(
        {{Scalar::basis_element(basis, 0),
          Scalar::basis_element(basis, 0, Rational(2), Rational(1, 2))}},
        2);
    REQUIRE(rel4.size() == 1);
    // v·(β1, 2β1 + 1/2) ∈ ℤ needs v1 + 2 v2 = 0 and v2/2 ∈ ℤ: generated by (-4, 2)
    CHECK(rel4[0][0] * 1 + rel4[0][1] * 2 == 0);
    CHECK(rel4[0][1] % 2 == 0);
}

TEST_CASE("express in lattice") {
    IntMat basis = mat({{1, 0, 1}, {0, 2, 0}});
    IntRow c = express_in_lattice(basis, {3, 4, 3});
    CHECK(c[0] == 3);
    CHECK(c[1] == 2);
    CHECK_THROWS_AS(express_in_lattice(basis, {0, 1, 0}), Error);
}
