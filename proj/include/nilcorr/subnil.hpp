#pragma once

#include <optional>
#include <vector>

#include "nilcorr/nilgroup.hpp"

namespace nilcorr {

/// Closed connected rational subgroup, described by the rational row span of
/// its Lie-algebra directions in Malcev coordinates (row-reduced over ℚ).
class Subgroup {
public:
    Subgroup(PresentationPtr pres, RatMat cont_span, std::vector<GroupElement> generators = {},
             bool flag_normal = false)
        : pres_(std::move(pres)), generators_(std::move(generators)), normal_(flag_normal) {
        for (auto& row : cont_span)
            row.resize(pres_->dim(), Rational(0));
        rref_rational(cont_span);
        span_ = std::move(cont_span);
        check_bracket_closed();
        check_rational();
    }

    const PresentationPtr& presentation() const { return pres_; }
    const RatMat& cont_span() const { return span_; }
    const std::vector<GroupElement>& generators() const { return generators_; }
    bool flagged_normal() const { return normal_; }
    std::size_t rank() const { return span_.size(); }

    /// Saturated integer lattice basis of the span: the coordinates of H ∩ Γ.
    IntMat lattice_basis() const { return saturate_span(span_, pres_->dim()); }

    bool contains_direction(const RatRow& v) const {
        RatMat m = span_;
        m.push_back(v);
        return rank_rational(m) == span_.size();
    }

private:
    void check_bracket_closed() const {
        for (const auto& u : span_)
            for (const auto& v : span_) {
                RatRow w = pres_->bracket(u, v);
                bool zero = true;
                for (const auto& x : w)
                    if (x != 0) { zero = false; break; }
                if (!zero && !contains_direction(w))
                    throw Error(ErrorCode::Validation, "span not closed under the bracket", "subgroup");
            }
    }

    /// Rationality: the integer points of the span form a full-rank lattice
    /// (Smith normal form of the saturated basis has rank = span rank).
    void check_rational() const {
        IntMat basis = lattice_basis();
        auto inv = snf_invariants(basis);
        std::size_t r = 0;
        for (const auto& d : inv)
            if (d != 0) ++r;
        if (r != span_.size())
            throw Error(ErrorCode::Validation, "span has no full-rank integer lattice", "subgroup");
    }

    PresentationPtr pres_;
    RatMat span_;
    std::vector<GroupElement> generators_;
    bool normal_;
};

/// Closed subnilmanifold Y = H·x of X = G/Γ.
class Subnilmanifold {
public:
    Subnilmanifold(Subgroup subgroup, GroupElement basepoint)
        : subgroup_(std::move(subgroup)), basepoint_(std::move(basepoint)) {
        if (!basepoint_.presentation()->same_as(*subgroup_.presentation()))
            throw Error(ErrorCode::PresentationMismatch, "basepoint/presentation mismatch", "subnilmanifold");
    }

    static Subnilmanifold through_identity(PresentationPtr pres, RatMat span, bool flag_normal = false) {
        auto base = GroupElement::identity(pres);
        return Subnilmanifold(Subgroup(std::move(pres), std::move(span), {}, flag_normal), std::move(base));
    }

    static Subnilmanifold whole(PresentationPtr pres) {
        RatMat span(pres->dim(), RatRow(pres->dim(), Rational(0)));
        for (int i = 0; i < pres->dim(); ++i) span[i][i] = Rational(1);
        return through_identity(std::move(pres), std::move(span), true);
    }

    static Subnilmanifold point(PresentationPtr pres, GroupElement at) {
        return Subnilmanifold(Subgroup(std::move(pres), {}), std::move(at));
    }

    const Subgroup& subgroup() const { return subgroup_; }
    const GroupElement& basepoint() const { return basepoint_; }
    const PresentationPtr& presentation() const { return subgroup_.presentation(); }
    std::size_t dimension() const { return subgroup_.rank(); }

    Subnilmanifold translated(const GroupElement& a) const {
        return Subnilmanifold(subgroup_, multiply(a, basepoint_));
    }

private:
    Subgroup subgroup_;
    GroupElement basepoint_;
};

/// Normal closure of Y (through the identity) inside X, or inside a restricted
/// ambient span when `within` is given (used with orbit closures): the span grows
/// by all brackets [ambient basis, span] until stable, which for step ≤ 2 is one
/// pass. The result is flagged normal.
inline Subnilmanifold normal_closure(const Subnilmanifold& y,
                                     const std::optional<RatMat>& within = std::nullopt) {
    const auto& pres = y.presentation();
    if (pres->step() > 2)
        throw Error(ErrorCode::StepUnsupported, "normal closure shipped for step <= 2 only");
    if (!y.basepoint().is_identity() && !y.basepoint().in_lattice())
        throw Error(ErrorCode::Validation, "normal closure needs a subnilmanifold through the base point",
                    "normal_closure");
    RatMat ambient;
    if (within) {
        ambient = *within;
    } else {
        ambient.assign(pres->dim(), RatRow(pres->dim(), Rational(0)));
        for (int i = 0; i < pres->dim(); ++i) ambient[i][i] = Rational(1);
    }
    RatMat span = y.subgroup().cont_span();
    bool grew = true;
    while (grew) {
        grew = false;
        RatMat candidate = span;
        for (const auto& u : ambient)
            for (const auto& v : span) candidate.push_back(pres->bracket(u, v));
        rref_rational(candidate);
        if (candidate.size() != span.size()) grew = true;
        span = std::move(candidate);
    }
    return Subnilmanifold(Subgroup(pres, std::move(span), {}, true), GroupElement::identity(pres));
}

struct TorusOrbitClosure {
    Subnilmanifold subtorus;   // identity component of the closure, through 0
    Int cosets;                // number of connected components
    IntMat relations;          // relation lattice {v : v·alpha ∈ ℤ}
};

/// Orbit closure of {n·alpha mod 1 : n ∈ ℤ} in T^k via the integer relation
/// lattice (kernel of the coefficient matrix over the irrational basis plus
/// congruence conditions on the rational parts, through Smith normal form).
/// Rational alpha yields a finite orbit: 0-dimensional subtorus with coset count.
inline TorusOrbitClosure orbit_closure_torus(const std::vector<Scalar>& alpha, int k) {
    if (static_cast<int>(alpha.size()) != k)
        throw Error(ErrorCode::DimensionMismatch, "alpha size != k", "orbit_closure_torus");
    IntMat rel = relation_lattice({alpha}, static_cast<std::size_t>(k));
    Int cosets = 1;
    for (const auto& d : snf_invariants(rel))
        if (d > 1) cosets *= d;
    RatMat ann = to_rational_rows(kernel_int(rel, static_cast<std::size_t>(k)));
    auto sub = Subnilmanifold::through_identity(GroupPresentation::torus(k), std::move(ann), true);
    return TorusOrbitClosure{std::move(sub), std::move(cosets), std::move(rel)};
}

} // namespace nilcorr
