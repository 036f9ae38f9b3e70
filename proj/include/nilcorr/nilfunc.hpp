#pragma once

#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "nilcorr/complexutil.hpp"
#include "nilcorr/polyseq.hpp"
#include "nilcorr/quadrature.hpp"
#include "nilcorr/subnil.hpp"

namespace nilcorr {

// ---------------------------------------------------------------------------
// Piecewise polynomials on the fundamental cube
// ---------------------------------------------------------------------------

/// Polynomial with rational coefficients in the cube coordinates.
class RatPoly {
public:
    RatPoly() = default;
    explicit RatPoly(int d) : d_(d) {}

    int dim() const { return d_; }
    const std::map<MultiIndex, Rational>& terms() const { return terms_; }
    bool is_constant() const {
        for (const auto& [e, c] : terms_)
            for (auto x : e)
                if (x != 0) return false;
        return true;
    }

    void set_term(MultiIndex e, Rational c) {
        if (e.size() != static_cast<std::size_t>(d_))
            throw Error(ErrorCode::DimensionMismatch, "exponent size != dim", "ratpoly");
        if (c == 0) terms_.erase(e);
        else terms_[std::move(e)] = std::move(c);
    }

    static RatPoly constant(int d, Rational c) {
        RatPoly p(d);
        p.set_term(MultiIndex(d, 0), std::move(c));
        return p;
    }

    Scalar eval(std::span<const Scalar> x) const {
        Scalar acc;
        for (const auto& [e, c] : terms_) {
            Scalar t{c};
            for (int i = 0; i < d_; ++i)
                for (std::uint32_t k = 0; k < e[i]; ++k) t *= x[i];
            acc += t;
        }
        return acc;
    }

    double eval_double(std::span<const double> x) const {
        double acc = 0;
        for (const auto& [e, c] : terms_) {
            double t = rational_to_double(c);
            for (int i = 0; i < d_; ++i)
                for (std::uint32_t k = 0; k < e[i]; ++k) t *= x[i];
            acc += t;
        }
        return acc;
    }

    /// Σ|coeff| — a sup bound on boxes inside the unit cube.
    double sup_bound_unit_cube() const {
        double b = 0;
        for (const auto& [e, c] : terms_) b += std::abs(rational_to_double(c));
        return b;
    }

    /// Exact ∫ over an axis box.
    Rational integrate_box(const std::vector<std::pair<Rational, Rational>>& box) const {
        Rational acc = 0;
        for (const auto& [e, c] : terms_) {
            Rational t = c;
            for (int i = 0; i < d_; ++i) {
                unsigned p = e[i] + 1;
                Rational hi = box[i].second, lo = box[i].first;
                Rational hp = 1, lp = 1;
                for (unsigned k = 0; k < p; ++k) { hp *= hi; lp *= lo; }
                t *= (hp - lp) / Rational(p);
            }
            acc += t;
        }
        return acc;
    }

    /// Degree in variable i.
    std::uint32_t degree_in(int i) const {
        std::uint32_t deg = 0;
        for (const auto& [e, c] : terms_) deg = std::max(deg, e[i]);
        return deg;
    }

    /// Drop the listed variables (they must not occur) and renumber the rest.
    RatPoly project_out(const std::vector<int>& dropped) const {
        std::vector<int> keep;
        for (int i = 0; i < d_; ++i) {
            bool gone = false;
            for (int j : dropped)
                if (j == i) { gone = true; break; }
            if (!gone) keep.push_back(i);
        }
        RatPoly out(static_cast<int>(keep.size()));
        for (const auto& [e, c] : terms_) {
            MultiIndex f(keep.size(), 0);
            for (std::size_t t = 0; t < keep.size(); ++t) f[t] = e[keep[t]];
            for (int j : dropped)
                if (e[j] != 0)
                    throw Error(ErrorCode::NotFactorable, "polynomial varies along dropped coordinate");
            out.set_term(std::move(f), c);
        }
        return out;
    }

private:
    int d_ = 0;
    std::map<MultiIndex, Rational> terms_;
};

/// Half-open rational box ∏ [lo_i, hi_i) inside the fundamental cube.
struct RatBox {
    std::vector<std::pair<Rational, Rational>> intervals;

    bool contains(std::span<const Scalar> x) const {
        for (std::size_t i = 0; i < intervals.size(); ++i) {
            Scalar lo{intervals[i].first}, hi{intervals[i].second};
            if (x[i].compare(lo) < 0) return false;
            if (x[i].compare(hi) >= 0) return false;
        }
        return true;
    }

    bool contains_double(std::span<const double> x) const {
        for (std::size_t i = 0; i < intervals.size(); ++i) {
            if (x[i] < rational_to_double(intervals[i].first)) return false;
            if (x[i] >= rational_to_double(intervals[i].second)) return false;
        }
        return true;
    }
};

/// Piecewise polynomial: boxes with disjoint interiors; empty list = constant 1.
class PiecewisePoly {
public:
    PiecewisePoly() = default;
    explicit PiecewisePoly(int d) : d_(d) {}

    int dim() const { return d_; }
    bool trivial() const { return pieces_.empty(); }
    const std::vector<std::pair<RatBox, RatPoly>>& pieces() const { return pieces_; }

    void add_piece(RatBox box, RatPoly poly) {
        if (static_cast<int>(box.intervals.size()) != d_ || poly.dim() != d_)
            throw Error(ErrorCode::DimensionMismatch, "piece dims differ", "piecewise");
        for (const auto& [lo, hi] : box.intervals)
            if (!(lo < hi) || lo < 0 || hi > 1)
                throw Error(ErrorCode::Validation, "box not inside the fundamental cube", "piecewise");
        for (const auto& [b, p] : pieces_) {
            bool disjoint = false;
            for (int i = 0; i < d_; ++i)
                if (b.intervals[i].second <= box.intervals[i].first ||
                    box.intervals[i].second <= b.intervals[i].first)
                    disjoint = true;
            if (!disjoint)
                throw Error(ErrorCode::Validation, "piece boxes overlap", "piecewise");
        }
        pieces_.emplace_back(std::move(box), std::move(poly));
    }

    /// Value at an exact cube point; boundary resolution is by half-open boxes.
    Scalar eval(std::span<const Scalar> x) const {
        if (trivial()) return Scalar(Rational(1));
        for (const auto& [box, poly] : pieces_)
            if (box.contains(x)) return poly.eval(x);
        return Scalar();
    }

    double eval_double(std::span<const double> x) const {
        if (trivial()) return 1.0;
        for (const auto& [box, poly] : pieces_)
            if (box.contains_double(x)) return poly.eval_double(x);
        return 0.0;
    }

    double sup_bound() const {
        if (trivial()) return 1.0;
        double b = 0;
        for (const auto& [box, poly] : pieces_) b = std::max(b, poly.sup_bound_unit_cube());
        return b;
    }

private:
    int d_ = 0;
    std::vector<std::pair<RatBox, RatPoly>> pieces_;
};

// ---------------------------------------------------------------------------
// NilFunction
// ---------------------------------------------------------------------------

/// A function on a catalog nilmanifold: Σ coeff · e^{2πi m·u_tf} · pp(u), with
/// m running over the torus-factor coordinates and pp a piecewise polynomial on
/// the fundamental cube (trivial pp = 1).
class NilFunction {
public:
    struct Term {
        Complex coeff{1.0, 0.0};
        IntRow freq;        // length tf_dim
        PiecewisePoly pp;   // dim = full cube dim; trivial if absent
    };

    explicit NilFunction(PresentationPtr pres) : pres_(std::move(pres)) {}

    const PresentationPtr& presentation() const { return pres_; }
    const std::vector<Term>& terms() const { return terms_; }

    NilFunction& add_term(Term t) {
        if (t.freq.size() != static_cast<std::size_t>(pres_->tf_dim()))
            throw Error(ErrorCode::DimensionMismatch, "character frequency length != tf dim", "nilfunc");
        if (!t.pp.trivial() && t.pp.dim() != pres_->dim())
            throw Error(ErrorCode::DimensionMismatch, "piecewise factor dim != cube dim", "nilfunc");
        terms_.push_back(std::move(t));
        return *this;
    }

    NilFunction& add_character(IntRow freq, Complex coeff = {1.0, 0.0}) {
        Term t;
        t.coeff = coeff;
        t.freq = std::move(freq);
        t.pp = PiecewisePoly(pres_->dim());
        // trivial pp has pieces() empty regardless of dim; mark dims consistent
        return add_term(std::move(t));
    }

    NilFunction& add_piecewise(PiecewisePoly pp, Complex coeff = {1.0, 0.0}) {
        Term t;
        t.coeff = coeff;
        t.freq = IntRow(pres_->tf_dim(), Int(0));
        t.pp = std::move(pp);
        return add_term(std::move(t));
    }

    static NilFunction constant(PresentationPtr pres, Complex c) {
        NilFunction f(std::move(pres));
        f.add_character(IntRow(f.pres_->tf_dim(), Int(0)), c);
        return f;
    }

    bool characters_only() const {
        for (const auto& t : terms_)
            if (!t.pp.trivial()) return false;
        return true;
    }

    double bound() const {
        double b = 0;
        for (const auto& t : terms_) b += std::abs(t.coeff) * t.pp.sup_bound();
        return b;
    }

    /// Value at a cube representative (the caller reduces first).
    Complex eval_at(const GroupElement& q) const {
        if (!q.presentation()->same_as(*pres_))
            throw Error(ErrorCode::PresentationMismatch, "function/point presentation mismatch", "eval_at");
        auto tf = tf_coords(q);
        Complex acc = 0.0;
        for (const auto& t : terms_) {
            Scalar phase;
            for (std::size_t i = 0; i < tf.size(); ++i)
                if (t.freq[i] != 0) phase += tf[i] * Scalar(Rational(t.freq[i]));
            Complex v = t.coeff * unit_phase(scalar_phase_unit(phase));
            if (!t.pp.trivial()) {
                Scalar pv = t.pp.eval(std::span<const Scalar>(q.coords().data(), q.coords().size()));
                v *= pv.to_double();
            }
            acc += v;
        }
        return acc;
    }

    /// Numeric twin of eval_at for quadrature nodes (cube coordinates as doubles).
    Complex eval_at_double(std::span<const double> cube_coords) const {
        Complex acc = 0.0;
        const auto& tfi = pres_->tf_indices();
        for (const auto& t : terms_) {
            double phase = 0;
            for (std::size_t i = 0; i < tfi.size(); ++i)
                if (t.freq[i] != 0) phase += static_cast<double>(t.freq[i]) * cube_coords[tfi[i]];
            Complex v = t.coeff * unit_phase(phase - std::floor(phase));
            if (!t.pp.trivial()) v *= t.pp.eval_double(cube_coords);
            acc += v;
        }
        return acc;
    }

private:
    PresentationPtr pres_;
    std::vector<Term> terms_;
};

// ---------------------------------------------------------------------------
// SequenceHandle
// ---------------------------------------------------------------------------

struct NilsequenceProvenance {
    NilFunction f;
    GroupSequence g;
    GroupElement x0;
};

struct AlternationProvenance;

/// Lazy bounded map ℤ^d → ℂ: the common currency of nilsequences, residuals and
/// correlation sequences.
class SequenceHandle {
public:
    using EvalFn = std::function<Complex(std::span<const Int>)>;

    SequenceHandle() = default;
    SequenceHandle(int d, double bound, EvalFn eval)
        : d_(d), bound_(bound), eval_(std::move(eval)) {}

    int dim() const { return d_; }
    double bound() const { return bound_; }

    Complex eval(std::span<const Int> n) const { return eval_(n); }
    Complex eval1(const Int& n) const { return eval_(std::span<const Int>(&n, 1)); }
    Complex eval_at(std::initializer_list<long long> n) const {
        std::vector<Int> v(n.begin(), n.end());
        return eval_(v);
    }

    const std::shared_ptr<const NilsequenceProvenance>& nil_provenance() const { return nil_prov_; }
    const std::shared_ptr<const AlternationProvenance>& alt_provenance() const { return alt_prov_; }

    SequenceHandle with_nil_provenance(std::shared_ptr<const NilsequenceProvenance> p) const {
        SequenceHandle h = *this;
        h.nil_prov_ = std::move(p);
        return h;
    }
    SequenceHandle with_alt_provenance(std::shared_ptr<const AlternationProvenance> p) const {
        SequenceHandle h = *this;
        h.alt_prov_ = std::move(p);
        return h;
    }

    friend SequenceHandle operator+(const SequenceHandle& a, const SequenceHandle& b) {
        if (a.d_ != b.d_) throw Error(ErrorCode::DimensionMismatch, "handle dims differ");
        auto ea = a.eval_, eb = b.eval_;
        return SequenceHandle(a.d_, a.bound_ + b.bound_,
                              [ea, eb](std::span<const Int> n) { return ea(n) + eb(n); });
    }
    friend SequenceHandle operator-(const SequenceHandle& a, const SequenceHandle& b) {
        if (a.d_ != b.d_) throw Error(ErrorCode::DimensionMismatch, "handle dims differ");
        auto ea = a.eval_, eb = b.eval_;
        return SequenceHandle(a.d_, a.bound_ + b.bound_,
                              [ea, eb](std::span<const Int> n) { return ea(n) - eb(n); });
    }
    friend SequenceHandle operator*(Complex c, const SequenceHandle& a) {
        auto ea = a.eval_;
        return SequenceHandle(a.d_, std::abs(c) * a.bound_,
                              [ea, c](std::span<const Int> n) { return c * ea(n); });
    }

    static SequenceHandle zero(int d) {
        return SequenceHandle(d, 0.0, [](std::span<const Int>) { return Complex(0.0); });
    }

private:
    int d_ = 1;
    double bound_ = 0.0;
    EvalFn eval_;
    std::shared_ptr<const NilsequenceProvenance> nil_prov_;
    std::shared_ptr<const AlternationProvenance> alt_prov_;
};

struct AlternationProvenance {
    int k = 1;
    std::vector<std::pair<std::vector<Int>, SequenceHandle>> components;
};

/// ψ(n) = f(g(n)·x0 reduced to the cube).
inline SequenceHandle nilsequence(const NilFunction& f, const GroupSequence& g, const GroupElement& x0) {
    if (!f.presentation()->same_as(*g.presentation()) ||
        !f.presentation()->same_as(*x0.presentation()))
        throw Error(ErrorCode::PresentationMismatch, "nilsequence pieces disagree", "nilsequence");
    auto prov = std::make_shared<NilsequenceProvenance>(NilsequenceProvenance{f, g, x0});
    auto eval = [prov](std::span<const Int> n) {
        GroupElement pt = multiply(prov->g.eval(n), prov->x0);
        return prov->f.eval_at(reduce_mod_lattice(pt).q);
    };
    return SequenceHandle(g.dim(), f.bound(), eval).with_nil_provenance(prov);
}

} // namespace nilcorr

#include "nilcorr/nilfunc_integrate.hpp"
#include "nilcorr/nilfunc_factor.hpp"
