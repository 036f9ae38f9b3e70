#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "nilcorr/intpoly.hpp"
#include "nilcorr/nilgroup.hpp"

namespace nilcorr {

/// g(n) = a₁^{p₁(n)} ⋯ a_k^{p_k(n)} over ℤ^d.
class PolySequence {
public:
    struct Factor {
        GroupElement base;
        IntPolynomial exponent;
    };

    PolySequence(PresentationPtr pres, int d) : pres_(std::move(pres)), d_(d) {}

    PolySequence(PresentationPtr pres, int d, std::vector<Factor> factors)
        : pres_(std::move(pres)), d_(d), factors_(std::move(factors)) {
        for (const auto& f : factors_) {
            if (!f.base.presentation()->same_as(*pres_))
                throw Error(ErrorCode::PresentationMismatch, "factor base in wrong group", "polyseq");
            if (f.exponent.dim() != d_)
                throw Error(ErrorCode::DimensionMismatch, "exponent polynomial dim != d", "polyseq");
        }
    }

    void push_factor(GroupElement base, IntPolynomial exponent) {
        if (!base.presentation()->same_as(*pres_))
            throw Error(ErrorCode::PresentationMismatch, "factor base in wrong group", "polyseq");
        if (exponent.dim() != d_)
            throw Error(ErrorCode::DimensionMismatch, "exponent polynomial dim != d", "polyseq");
        factors_.push_back(Factor{std::move(base), std::move(exponent)});
    }

    const PresentationPtr& presentation() const { return pres_; }
    int dim() const { return d_; }
    const std::vector<Factor>& factors() const { return factors_; }

    int naive_degree() const {
        int deg = 0;
        for (const auto& f : factors_) deg = std::max(deg, f.exponent.degree());
        return deg;
    }

    GroupElement eval(std::span<const Int> n) const {
        GroupElement acc = GroupElement::identity(pres_);
        for (const auto& f : factors_) acc = multiply(acc, power(f.base, f.exponent.eval(n)));
        return acc;
    }

    GroupElement eval1(const Int& n) const { return eval(std::span<const Int>(&n, 1)); }

private:
    PresentationPtr pres_;
    int d_ = 1;
    std::vector<Factor> factors_;
};

/// Lazy group-valued sequence: the common shape of polynomial sequences, their
/// shifts and products (factor-list normal forms in nonabelian groups are not
/// re-derived; values are composed pointwise).
class GroupSequence {
public:
    using EvalFn = std::function<GroupElement(std::span<const Int>)>;

    GroupSequence(PresentationPtr pres, int d, EvalFn eval)
        : pres_(std::move(pres)), d_(d), eval_(std::move(eval)) {}

    /*implicit*/ GroupSequence(const PolySequence& p)
        : pres_(p.presentation()), d_(p.dim()), poly_(std::make_shared<PolySequence>(p)) {
        auto keep = poly_;
        eval_ = [keep](std::span<const Int> n) { return keep->eval(n); };
    }

    const PresentationPtr& presentation() const { return pres_; }
    int dim() const { return d_; }
    GroupElement eval(std::span<const Int> n) const { return eval_(n); }
    GroupElement eval1(const Int& n) const { return eval_(std::span<const Int>(&n, 1)); }

    /// Underlying polynomial factor data when this sequence is a plain PolySequence.
    std::shared_ptr<const PolySequence> poly() const { return poly_; }

private:
    PresentationPtr pres_;
    int d_;
    EvalFn eval_;
    std::shared_ptr<const PolySequence> poly_;
};

/// Pointwise g(n+m).
inline GroupSequence shift(const GroupSequence& g, std::vector<Int> m) {
    if (static_cast<int>(m.size()) != g.dim())
        throw Error(ErrorCode::DimensionMismatch, "shift vector dim != d", "polyseq.shift");
    auto base = g;
    return GroupSequence(g.presentation(), g.dim(), [base, m](std::span<const Int> n) {
        std::vector<Int> t(n.begin(), n.end());
        for (std::size_t i = 0; i < t.size(); ++i) t[i] += m[i];
        return base.eval(t);
    });
}

/// Pointwise g(n)·h(n).
inline GroupSequence product(const GroupSequence& g, const GroupSequence& h) {
    if (!g.presentation()->same_as(*h.presentation()))
        throw Error(ErrorCode::PresentationMismatch, "sequence product across groups", "polyseq.product");
    if (g.dim() != h.dim())
        throw Error(ErrorCode::DimensionMismatch, "sequence product across parameter dims", "polyseq.product");
    auto a = g, b = h;
    return GroupSequence(g.presentation(), g.dim(),
                         [a, b](std::span<const Int> n) { return multiply(a.eval(n), b.eval(n)); });
}

/// Re-parametrization g'(n) = ∏ a_i^{p_i((n - offset)/scale)} with rational
/// exponents through the closed-form one-parameter powers; satisfies
/// g'(scale·m + offset) = g(m) exactly.
inline GroupSequence reparametrize(const PolySequence& g, const Int& scale, std::vector<Int> offset) {
    if (static_cast<int>(offset.size()) != g.dim())
        throw Error(ErrorCode::DimensionMismatch, "offset dim != d", "polyseq.reparametrize");
    auto base = std::make_shared<PolySequence>(g);
    Int s = scale;
    return GroupSequence(g.presentation(), g.dim(), [base, s, offset](std::span<const Int> n) {
        std::vector<Rational> t(n.size());
        for (std::size_t i = 0; i < n.size(); ++i) t[i] = Rational(n[i] - offset[i], s);
        GroupElement acc = GroupElement::identity(base->presentation());
        for (const auto& f : base->factors())
            acc = multiply(acc, power(f.base, f.exponent.eval_rational(t)));
        return acc;
    });
}

} // namespace nilcorr
