#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nilcorr/intlinalg.hpp"
#include "nilcorr/scalar.hpp"

namespace nilcorr {

enum class GroupKind { Torus, Heisenberg3, DirectProduct };

/// One bilinear entry of the multiplication table: out-coordinate of a·b picks up
/// coeff · u_lhs · v_rhs (u = coords of a, v = coords of b).
struct BilinearTerm {
    int out;
    int lhs;
    int rhs;
    Rational coeff;
};

class GroupPresentation;
using PresentationPtr = std::shared_ptr<const GroupPresentation>;

/// Catalog nilpotent Lie group in Malcev coordinates. The multiplication table
/// is linear-plus-bilinear, q_i(u,v) = u_i + v_i + Σ c·u_a·v_b, which covers
/// every step ≤ 2 member (tori, Heisenberg-3, direct products). The table is
/// triangular: bilinear inputs only reference coordinates strictly before the
/// output coordinate, so cube reduction can clear coordinates in Malcev order.
class GroupPresentation : public std::enable_shared_from_this<GroupPresentation> {
public:
    static PresentationPtr torus(int k) {
        auto p = std::shared_ptr<GroupPresentation>(new GroupPresentation());
        p->kind_ = GroupKind::Torus;
        p->dim_ = k;
        p->step_ = 1;
        p->tf_indices_.resize(k);
        for (int i = 0; i < k; ++i) p->tf_indices_[i] = i;
        return p;
    }

    static PresentationPtr heisenberg3() {
        auto p = std::shared_ptr<GroupPresentation>(new GroupPresentation());
        p->kind_ = GroupKind::Heisenberg3;
        p->dim_ = 3;
        p->step_ = 2;
        p->bilinear_.push_back(BilinearTerm{2, 0, 1, Rational(1)}); // z'' += x·y'
        p->tf_indices_ = {0, 1};
        return p;
    }

    static PresentationPtr product(std::vector<PresentationPtr> factors) {
        auto p = std::shared_ptr<GroupPresentation>(new GroupPresentation());
        p->kind_ = GroupKind::DirectProduct;
        p->factors_ = std::move(factors);
        p->dim_ = 0;
        p->step_ = 1;
        for (const auto& f : p->factors_) {
            for (const auto& t : f->bilinear_)
                p->bilinear_.push_back(BilinearTerm{t.out + p->dim_, t.lhs + p->dim_, t.rhs + p->dim_, t.coeff});
            for (int i : f->tf_indices_) p->tf_indices_.push_back(i + p->dim_);
            p->dim_ += f->dim_;
            p->step_ = std::max(p->step_, f->step_);
        }
        return p;
    }

    static PresentationPtr power(const PresentationPtr& base, int copies) {
        std::vector<PresentationPtr> fs(copies, base);
        return product(std::move(fs));
    }

    GroupKind kind() const { return kind_; }
    int dim() const { return dim_; } // k = k₁ (catalog groups are connected)
    int step() const { return step_; }
    const std::vector<BilinearTerm>& bilinear() const { return bilinear_; }
    const std::vector<PresentationPtr>& factors() const { return factors_; }

    /// Torus-factor coordinates: all coordinates not generated by brackets.
    const std::vector<int>& tf_indices() const { return tf_indices_; }
    int tf_dim() const { return static_cast<int>(tf_indices_.size()); }

    bool same_as(const GroupPresentation& o) const {
        if (kind_ != o.kind_ || dim_ != o.dim_) return false;
        if (kind_ == GroupKind::DirectProduct) {
            if (factors_.size() != o.factors_.size()) return false;
            for (std::size_t i = 0; i < factors_.size(); ++i)
                if (!factors_[i]->same_as(*o.factors_[i])) return false;
        }
        return true;
    }

    std::string name() const {
        switch (kind_) {
            case GroupKind::Torus: return "T^" + std::to_string(dim_);
            case GroupKind::Heisenberg3: return "H3";
            case GroupKind::DirectProduct: {
                std::string s = "(";
                for (std::size_t i = 0; i < factors_.size(); ++i) {
                    if (i) s += " x ";
                    s += factors_[i]->name();
                }
                return s + ")";
            }
        }
        return "?";
    }

    /// Bilinear part B_i(u, v) for coordinate vectors over any ring with +,*.
    template <typename T>
    std::vector<T> bilinear_eval(std::span<const T> u, std::span<const T> v) const {
        std::vector<T> out(dim_, T(0));
        for (const auto& t : bilinear_) out[t.out] += u[t.lhs] * v[t.rhs] * T(t.coeff);
        return out;
    }

    /// Lie bracket table on coordinate vectors (rational rows): [u, v]_i = B_i(u,v) − B_i(v,u).
    RatRow bracket(const RatRow& u, const RatRow& v) const {
        RatRow out(dim_, Rational(0));
        for (const auto& t : bilinear_)
            out[t.out] += t.coeff * (u[t.lhs] * v[t.rhs] - v[t.lhs] * u[t.rhs]);
        return out;
    }

private:
    GroupPresentation() = default;

    GroupKind kind_ = GroupKind::Torus;
    int dim_ = 0;
    int step_ = 1;
    std::vector<BilinearTerm> bilinear_;
    std::vector<PresentationPtr> factors_;
    std::vector<int> tf_indices_;
};

class GroupElement {
public:
    GroupElement() = default;
    GroupElement(PresentationPtr pres, std::vector<Scalar> coords)
        : pres_(std::move(pres)), coords_(std::move(coords)) {
        if (!pres_ || coords_.size() != static_cast<std::size_t>(pres_->dim()))
            throw Error(ErrorCode::DimensionMismatch, "coordinate count != presentation dimension",
                        "group_element");
    }

    static GroupElement identity(PresentationPtr pres) {
        int k = pres->dim();
        return GroupElement(std::move(pres), std::vector<Scalar>(k));
    }

    static GroupElement from_rationals(PresentationPtr pres, const std::vector<Rational>& coords) {
        std::vector<Scalar> c(coords.begin(), coords.end());
        return GroupElement(std::move(pres), std::move(c));
    }

    const PresentationPtr& presentation() const { return pres_; }
    const std::vector<Scalar>& coords() const { return coords_; }
    const Scalar& coord(int i) const { return coords_[i]; }

    bool in_lattice() const {
        for (const auto& c : coords_)
            if (!c.is_integer()) return false;
        return true;
    }

    bool is_identity() const {
        for (const auto& c : coords_)
            if (!c.is_zero()) return false;
        return true;
    }

    friend bool operator==(const GroupElement& a, const GroupElement& b) {
        return a.pres_->same_as(*b.pres_) && a.coords_ == b.coords_;
    }

    std::string to_string() const {
        std::string s = "(";
        for (std::size_t i = 0; i < coords_.size(); ++i) {
            if (i) s += ", ";
            s += coords_[i].to_string();
        }
        return s + ")";
    }

private:
    PresentationPtr pres_;
    std::vector<Scalar> coords_;
};

inline void require_same_presentation(const GroupElement& a, const GroupElement& b,
                                      const char* where) {
    if (!a.presentation() || !b.presentation() || !a.presentation()->same_as(*b.presentation()))
        throw Error(ErrorCode::PresentationMismatch, "elements live in different groups", where);
}

inline GroupElement multiply(const GroupElement& a, const GroupElement& b) {
    require_same_presentation(a, b, "multiply");
    const auto& pres = a.presentation();
    std::vector<Scalar> out(pres->dim());
    for (int i = 0; i < pres->dim(); ++i) out[i] = a.coord(i) + b.coord(i);
    for (const auto& t : pres->bilinear())
        out[t.out] += a.coord(t.lhs) * b.coord(t.rhs) * Scalar(Rational(t.coeff));
    return GroupElement(pres, std::move(out));
}

inline GroupElement inverse(const GroupElement& a) {
    const auto& pres = a.presentation();
    // Step ≤ 2: negate, then cancel the central defect r = a·(−a), which is
    // central, so a·((−a)·(−r)) = (a·(−a))·(−r) = e.
    std::vector<Scalar> neg(pres->dim());
    for (int i = 0; i < pres->dim(); ++i) neg[i] = -a.coord(i);
    GroupElement w(pres, std::move(neg));
    GroupElement r = multiply(a, w);
    if (r.is_identity()) return w;
    std::vector<Scalar> corr(pres->dim());
    for (int i = 0; i < pres->dim(); ++i) corr[i] = -r.coord(i);
    GroupElement fixed = multiply(w, GroupElement(pres, std::move(corr)));
    return fixed;
}

inline GroupElement commutator(const GroupElement& a, const GroupElement& b) {
    require_same_presentation(a, b, "commutator");
    return multiply(multiply(a, b), multiply(inverse(a), inverse(b)));
}

/// Closed-form one-parameter power: coords t·u plus C(t,2)·B(u,u) on bracket
/// coordinates. Valid on every step ≤ 2 catalog presentation; rational t gives
/// the roots used by the alternation construction.
inline GroupElement power(const GroupElement& a, const Rational& t) {
    const auto& pres = a.presentation();
    std::vector<Scalar> out(pres->dim());
    Scalar st{t};
    for (int i = 0; i < pres->dim(); ++i) out[i] = a.coord(i) * st;
    Rational c2 = t * (t - 1) / 2;
    if (c2 != 0) {
        Scalar sc{c2};
        for (const auto& bt : pres->bilinear())
            out[bt.out] += a.coord(bt.lhs) * a.coord(bt.rhs) * Scalar(Rational(bt.coeff)) * sc;
    }
    return GroupElement(pres, std::move(out));
}

inline GroupElement power(const GroupElement& a, const Int& n) { return power(a, Rational(n)); }
inline GroupElement power(const GroupElement& a, long long n) { return power(a, Rational(n)); }

/// Lattice generator e_i^m.
inline GroupElement lattice_generator_power(const PresentationPtr& pres, int i, const Int& m) {
    std::vector<Scalar> c(pres->dim());
    c[i] = Scalar(Rational(m));
    return GroupElement(pres, std::move(c));
}

struct ReducedElement {
    GroupElement q;     // representative with all coordinates in [0,1)
    GroupElement gamma; // lattice element with q = a·gamma
};

/// Deterministic reduction to the fundamental cube: clear coordinates in Malcev
/// order by right-multiplying with e_i^{-⌊u_i⌋}. Floors go through witnesses
/// with the FloorAmbiguous guard.
inline ReducedElement reduce_mod_lattice(const GroupElement& a) {
    const auto& pres = a.presentation();
    GroupElement cur = a;
    GroupElement gamma = GroupElement::identity(pres);
    for (int i = 0; i < pres->dim(); ++i) {
        Int m = cur.coord(i).floor();
        if (m == 0) continue;
        GroupElement gi = lattice_generator_power(pres, i, -m);
        cur = multiply(cur, gi);
        gamma = multiply(gamma, gi);
    }
    return ReducedElement{std::move(cur), std::move(gamma)};
}

/// Torus-factor coordinates of an element (the abelianization shadow).
inline std::vector<Scalar> tf_coords(const GroupElement& a) {
    std::vector<Scalar> out;
    out.reserve(a.presentation()->tf_indices().size());
    for (int i : a.presentation()->tf_indices()) out.push_back(a.coord(i));
    return out;
}

} // namespace nilcorr
