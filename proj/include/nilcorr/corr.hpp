#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "nilcorr/density.hpp"
#include "nilcorr/nilfunc.hpp"
#include "nilcorr/phasepoly.hpp"

namespace nilcorr {

// ---------------------------------------------------------------------------
// Measure-preserving system catalog
// ---------------------------------------------------------------------------

class MPSystem {
public:
    enum class Kind { TorusRotation, SkewProduct, NilTranslation, ConvexCombination, ParametrizedFamily };

    static MPSystem torus_rotation(std::vector<Scalar> alpha) {
        auto d = std::make_shared<Data>();
        d->kind = Kind::TorusRotation;
        d->alpha = std::move(alpha);
        if (d->alpha.empty())
            throw Error(ErrorCode::Validation, "rotation needs at least one coordinate", "mpsystem");
        d->pres = GroupPresentation::torus(static_cast<int>(d->alpha.size()));
        return MPSystem(std::move(d));
    }

    /// (x, y) ↦ (x + α, y + x) on T².
    static MPSystem skew_product(Scalar alpha) {
        auto d = std::make_shared<Data>();
        d->kind = Kind::SkewProduct;
        d->alpha = {std::move(alpha)};
        d->pres = GroupPresentation::torus(2);
        return MPSystem(std::move(d));
    }

    static MPSystem nil_translation(PresentationPtr pres, GroupElement a) {
        if (!a.presentation()->same_as(*pres))
            throw Error(ErrorCode::PresentationMismatch, "translation outside the presentation", "mpsystem");
        if (pres->step() > 2)
            throw Error(ErrorCode::StepUnsupported, "catalog ships step <= 2 presentations only");
        auto d = std::make_shared<Data>();
        d->kind = Kind::NilTranslation;
        d->pres = std::move(pres);
        d->a = std::move(a);
        return MPSystem(std::move(d));
    }

    static MPSystem convex_combination(std::vector<std::pair<double, MPSystem>> members) {
        return combination(Kind::ConvexCombination, std::move(members));
    }

    /// Finite weighted grid standing in (as quadrature) for a parametrized family.
    static MPSystem parametrized_family(std::vector<std::pair<double, MPSystem>> members) {
        return combination(Kind::ParametrizedFamily, std::move(members));
    }

    Kind kind() const { return data_->kind; }
    const std::vector<Scalar>& alpha() const { return data_->alpha; }
    const Scalar& skew_alpha() const { return data_->alpha[0]; }
    const GroupElement& translation() const { return data_->a; }
    const std::vector<std::pair<double, MPSystem>>& members() const { return data_->members; }

    /// The nilmanifold the observables live on.
    PresentationPtr phase_presentation() const {
        if (data_->pres) return data_->pres;
        return data_->members.front().second.phase_presentation();
    }

private:
    struct Data {
        Kind kind;
        std::vector<Scalar> alpha;
        PresentationPtr pres;
        GroupElement a;
        std::vector<std::pair<double, MPSystem>> members;
    };

    explicit MPSystem(std::shared_ptr<const Data> d) : data_(std::move(d)) {}

    static MPSystem combination(Kind kind, std::vector<std::pair<double, MPSystem>> members) {
        if (members.empty())
            throw Error(ErrorCode::Validation, "combination needs members", "mpsystem");
        double sum = 0;
        auto phase = members.front().second.phase_presentation();
        for (const auto& [w, sys] : members) {
            if (w < 0) throw Error(ErrorCode::Validation, "negative weight", "mpsystem");
            if (!sys.phase_presentation()->same_as(*phase))
                throw Error(ErrorCode::PresentationMismatch, "members live on different phase spaces",
                            "mpsystem");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw Error(ErrorCode::Validation, "weights must sum to 1", "mpsystem");
        auto d = std::make_shared<Data>();
        d->kind = kind;
        d->members = std::move(members);
        return MPSystem(std::move(d));
    }

    std::shared_ptr<const Data> data_;
};

/// Closed-form T^j on exact points (coordinates reduced back into the cube).
inline std::vector<Scalar> iterate(const MPSystem& sys, const Int& j, std::vector<Scalar> point) {
    switch (sys.kind()) {
        case MPSystem::Kind::TorusRotation: {
            const auto& alpha = sys.alpha();
            if (point.size() != alpha.size())
                throw Error(ErrorCode::DimensionMismatch, "point dim != rotation dim", "iterate");
            for (std::size_t i = 0; i < alpha.size(); ++i)
                point[i] = mod_one(point[i] + alpha[i] * Scalar(Rational(j)));
            return point;
        }
        case MPSystem::Kind::SkewProduct: {
            if (point.size() != 2)
                throw Error(ErrorCode::DimensionMismatch, "skew point must be 2-dimensional", "iterate");
            const Scalar& alpha = sys.skew_alpha();
            Scalar x = point[0], y = point[1];
            Rational c2 = Rational(j) * Rational(j - 1) / 2;
            Scalar x2 = mod_one(x + alpha * Scalar(Rational(j)));
            Scalar y2 = mod_one(y + x * Scalar(Rational(j)) + alpha * Scalar(c2));
            return {x2, y2};
        }
        case MPSystem::Kind::NilTranslation: {
            GroupElement pt(sys.phase_presentation(), std::move(point));
            GroupElement moved = multiply(power(sys.translation(), j), pt);
            return reduce_mod_lattice(moved).q.coords();
        }
        default:
            throw Error(ErrorCode::Validation, "iterate needs a concrete (non-combination) system",
                        "iterate");
    }
}

// ---------------------------------------------------------------------------
// Correlation specs
// ---------------------------------------------------------------------------

struct CorrelationSpec {
    MPSystem system;
    std::vector<NilFunction> observables;   // f₀ .. f_k
    std::vector<IntPolynomial> polynomials; // p₁ .. p_k
    std::optional<int> complexity_hint;     // user metadata, never computed

    int param_dim() const { return polynomials.empty() ? 1 : polynomials.front().dim(); }

    void validate() const {
        if (observables.empty())
            throw Error(ErrorCode::Validation, "need at least f0", "correlation_spec");
        if (observables.size() != polynomials.size() + 1)
            throw Error(ErrorCode::Validation, "need one polynomial per observable beyond f0",
                        "correlation_spec");
        auto phase = system.phase_presentation();
        for (const auto& f : observables)
            if (!f.presentation()->same_as(*phase))
                throw Error(ErrorCode::PresentationMismatch, "observable on wrong phase space",
                            "correlation_spec");
        for (const auto& p : polynomials)
            if (p.dim() != param_dim())
                throw Error(ErrorCode::DimensionMismatch, "polynomial parameter dims differ",
                            "correlation_spec");
    }

    bool characters_only() const {
        for (const auto& f : observables)
            if (!f.characters_only()) return false;
        return true;
    }
};

} // namespace nilcorr

#include "nilcorr/corr_engine.hpp"
