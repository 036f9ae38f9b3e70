#pragma once

// Conditional expectation onto normal factors and the alternation construction.
// Included by nilfunc.hpp.

#include <algorithm>

namespace nilcorr {

/// E(f | X/Z) for normal Z, represented on the factor's maximal torus:
/// quotient coordinates are m·u_tf(x) for m running over a saturated basis Λ of
/// the annihilator lattice of Z's torus-factor span. Characters survive iff
/// their frequency lies in Λ's span; piecewise factors must be constant along
/// Z's (axis-aligned) directions with full box extent there.
struct ConditionalExpectation {
    NilFunction factor;           // on Torus(rank Λ)
    PresentationPtr quotient;     // Torus(rank Λ)
    IntMat char_basis;            // Λ rows over tf coords: quotient coord j = Λ_j·u_tf
    std::vector<int> span_axes;   // full-coordinate axes covered by Z (when axis-aligned)
    bool axis_aligned = false;

    /// Image of a group element in the factor torus.
    GroupElement map_point(const GroupElement& x) const {
        auto tf = tf_coords(x);
        std::vector<Scalar> out(char_basis.size());
        for (std::size_t j = 0; j < char_basis.size(); ++j) {
            Scalar acc;
            for (std::size_t i = 0; i < tf.size(); ++i)
                if (char_basis[j][i] != 0) acc += tf[i] * Scalar(Rational(char_basis[j][i]));
            out[j] = acc;
        }
        return GroupElement(quotient, std::move(out));
    }
};

inline ConditionalExpectation conditional_expectation(const NilFunction& f, const Subnilmanifold& z) {
    const auto& pres = f.presentation();
    if (!pres->same_as(*z.presentation()))
        throw Error(ErrorCode::PresentationMismatch, "function/factor presentation mismatch",
                    "conditional_expectation");
    if (!z.subgroup().flagged_normal())
        throw Error(ErrorCode::NotNormal, "factor subnilmanifold is not flagged normal");
    const auto& span = z.subgroup().cont_span();
    const auto& tfi = pres->tf_indices();
    const int tf_dim = pres->tf_dim();

    // Axis alignment and covered axes.
    bool axis_aligned = true;
    std::vector<int> span_axes;
    for (const auto& row : span) {
        int nz = -1;
        bool single = true;
        for (int i = 0; i < pres->dim(); ++i)
            if (row[i] != 0) {
                if (nz >= 0) single = false;
                nz = i;
            }
        if (!single) axis_aligned = false;
        else if (nz >= 0) span_axes.push_back(nz);
    }
    if (!axis_aligned) span_axes.clear();

    // tf projection of the span and its annihilator lattice.
    RatMat tf_span;
    for (const auto& row : span) {
        RatRow pr(tf_dim, Rational(0));
        for (int j = 0; j < tf_dim; ++j) pr[j] = row[tfi[j]];
        tf_span.push_back(std::move(pr));
    }
    IntMat lambda;
    if (axis_aligned) {
        // Complement tf axes in order: keeps the piecewise transport coordinate-true.
        for (int j = 0; j < tf_dim; ++j) {
            bool covered = std::find(span_axes.begin(), span_axes.end(), tfi[j]) != span_axes.end();
            if (!covered) {
                IntRow e(tf_dim, 0);
                e[j] = 1;
                lambda.push_back(std::move(e));
            }
        }
    } else {
        lambda = annihilator_lattice(tf_span, tf_dim);
    }
    auto quotient = GroupPresentation::torus(static_cast<int>(lambda.size()));
    NilFunction out(quotient);

    // Which full-cube coordinates survive into the quotient cube (for pp transport).
    std::vector<int> dropped_vars;
    std::vector<int> kept_vars;
    if (axis_aligned) {
        for (int i = 0; i < pres->dim(); ++i) {
            if (std::find(span_axes.begin(), span_axes.end(), i) != span_axes.end())
                dropped_vars.push_back(i);
            else
                kept_vars.push_back(i);
        }
    }

    for (const auto& term : f.terms()) {
        // Keep iff the frequency annihilates the tf span.
        bool keep = true;
        for (const auto& row : tf_span) {
            Rational dot = 0;
            for (int j = 0; j < tf_dim; ++j)
                if (term.freq[j] != 0) dot += Rational(term.freq[j]) * row[j];
            if (dot != 0) { keep = false; break; }
        }
        PiecewisePoly qpp(static_cast<int>(lambda.size()));
        if (!term.pp.trivial()) {
            if (!axis_aligned)
                throw Error(ErrorCode::NotFactorable,
                            "piecewise factor over a non-axis-aligned factor direction");
            // Surviving cube coordinates must be exactly the quotient torus coordinates.
            if (kept_vars.size() != lambda.size())
                throw Error(ErrorCode::NotFactorable,
                            "piecewise factor survives along non-torus coordinates");
            for (const auto& [box, poly] : term.pp.pieces()) {
                for (int dv : dropped_vars) {
                    if (poly.degree_in(dv) != 0)
                        throw Error(ErrorCode::NotFactorable,
                                    "piecewise factor varies along the factor direction");
                    if (!(box.intervals[dv].first == 0 && box.intervals[dv].second == 1))
                        throw Error(ErrorCode::NotFactorable,
                                    "piecewise box does not have full extent along the factor direction");
                }
                RatBox qbox;
                for (int kv : kept_vars) qbox.intervals.push_back(box.intervals[kv]);
                qpp.add_piece(std::move(qbox), poly.project_out(dropped_vars));
            }
        }
        if (!keep) continue;
        IntRow freq_int(term.freq.begin(), term.freq.end());
        IntRow c = express_in_lattice(lambda, freq_int);
        NilFunction::Term t;
        t.coeff = term.coeff;
        t.freq = std::move(c);
        t.pp = std::move(qpp);
        out.add_term(std::move(t));
    }

    return ConditionalExpectation{std::move(out), quotient, std::move(lambda),
                                  std::move(span_axes), axis_aligned};
}

/// Alternation (interleaving): ψ(km+i) = ψ_i(m) for i ∈ {0..k-1}^d, realized by
/// the product-manifold construction with the re-parametrized sequences
/// g'_i(km+i) = g_i(m) (rational exponents through one-parameter closed forms).
/// Components must carry nilsequence provenance with polynomial factor data.
inline SequenceHandle alternate(int k,
                                const std::vector<std::pair<std::vector<Int>, SequenceHandle>>& comps) {
    if (k < 1) throw Error(ErrorCode::Validation, "alternation modulus must be >= 1", "alternate");
    if (comps.empty()) throw Error(ErrorCode::Validation, "no components", "alternate");
    const int d = comps.front().second.dim();
    std::size_t expected = 1;
    for (int i = 0; i < d; ++i) expected *= static_cast<std::size_t>(k);
    if (comps.size() != expected)
        throw Error(ErrorCode::Validation, "component map does not cover {0..k-1}^d", "alternate");

    struct Block {
        NilFunction f;
        GroupSequence reparam;
        GroupElement x0;
    };
    auto blocks = std::make_shared<std::map<std::vector<Int>, Block>>();
    std::vector<std::pair<std::vector<Int>, SequenceHandle>> prov_comps;
    double bound = 0;
    for (const auto& [idx, handle] : comps) {
        if (handle.dim() != d)
            throw Error(ErrorCode::DimensionMismatch, "component parameter dims differ", "alternate");
        if (static_cast<int>(idx.size()) != d)
            throw Error(ErrorCode::DimensionMismatch, "component index size != d", "alternate");
        for (const auto& v : idx)
            if (v < 0 || v >= k)
                throw Error(ErrorCode::Validation, "component index outside {0..k-1}^d", "alternate");
        auto prov = handle.nil_provenance();
        if (!prov)
            throw Error(ErrorCode::ProvenanceMissing, "component is a bare handle without (f,g,x0)");
        auto poly = prov->g.poly();
        if (!poly)
            throw Error(ErrorCode::ProvenanceMissing, "component sequence lacks polynomial factor data");
        blocks->emplace(idx, Block{prov->f, reparametrize(*poly, Int(k), idx), prov->x0});
        prov_comps.emplace_back(idx, handle);
        bound = std::max(bound, handle.bound());
    }

    Int kk(k);
    auto eval = [blocks, kk, d](std::span<const Int> n) {
        std::vector<Int> idx(d);
        for (int i = 0; i < d; ++i) {
            Int r = n[i] % kk;
            if (r < 0) r += kk;
            idx[i] = r;
        }
        auto it = blocks->find(idx);
        if (it == blocks->end())
            throw Error(ErrorCode::Validation, "missing alternation component", "alternate");
        const Block& blk = it->second;
        GroupElement pt = multiply(blk.reparam.eval(n), blk.x0);
        return blk.f.eval_at(reduce_mod_lattice(pt).q);
    };
    auto prov = std::make_shared<AlternationProvenance>(AlternationProvenance{k, std::move(prov_comps)});
    return SequenceHandle(d, bound, eval).with_alt_provenance(prov);
}

} // namespace nilcorr
