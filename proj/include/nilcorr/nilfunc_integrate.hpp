#pragma once

// Integration of NilFunctions over catalog subnilmanifolds. Included by nilfunc.hpp.

#include <algorithm>
#include <cmath>

namespace nilcorr {

namespace detail {

/// Right-multiplication and cube reduction on double coordinate vectors
/// (numeric twin of the exact path, used for quadrature nodes).
inline void reduce_double_coords(const PresentationPtr& pres, std::vector<double>& u) {
    for (int i = 0; i < pres->dim(); ++i) {
        double m = std::floor(u[i]);
        if (m == 0) continue;
        // u := u · e_i^{-m}
        for (const auto& t : pres->bilinear())
            if (t.rhs == i) u[t.out] += rational_to_double(t.coeff) * u[t.lhs] * (-m);
        u[i] -= m;
    }
}

struct AffineSegment {
    double t0, t1;
    std::vector<double> c, s; // coords(t) = c + s·t, already cube-reduced on [t0,t1)
};

/// Piecewise-affine cube reduction of the path t ↦ x0 · elt(t·b), t ∈ [0,1).
inline std::vector<AffineSegment> reduce_affine_path(const PresentationPtr& pres,
                                                     const std::vector<double>& c0,
                                                     const std::vector<double>& s0) {
    const int k = pres->dim();
    std::vector<AffineSegment> segs{AffineSegment{0.0, 1.0, c0, s0}};
    const double eps = 1e-13;
    for (int i = 0; i < k; ++i) {
        std::vector<AffineSegment> next;
        for (const auto& seg : segs) {
            std::vector<double> cuts{seg.t0, seg.t1};
            if (std::abs(seg.s[i]) > eps) {
                double va = seg.c[i] + seg.s[i] * seg.t0;
                double vb = seg.c[i] + seg.s[i] * seg.t1;
                double lo = std::min(va, vb), hi = std::max(va, vb);
                for (long long m = static_cast<long long>(std::ceil(lo - eps));
                     m <= static_cast<long long>(std::floor(hi + eps)); ++m) {
                    double t = (static_cast<double>(m) - seg.c[i]) / seg.s[i];
                    if (t > seg.t0 + eps && t < seg.t1 - eps) cuts.push_back(t);
                }
                std::sort(cuts.begin(), cuts.end());
            }
            for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
                double a = cuts[j], b = cuts[j + 1];
                if (b - a < eps) continue;
                AffineSegment piece{a, b, seg.c, seg.s};
                double mid = 0.5 * (a + b);
                double m = std::floor(piece.c[i] + piece.s[i] * mid);
                if (m != 0) {
                    // right-multiply by e_i^{-m}
                    for (const auto& t : pres->bilinear())
                        if (t.rhs == i) {
                            double co = rational_to_double(t.coeff) * (-m);
                            piece.c[t.out] += co * piece.c[t.lhs];
                            piece.s[t.out] += co * piece.s[t.lhs];
                        }
                    piece.c[i] -= m;
                }
                next.push_back(std::move(piece));
            }
        }
        segs = std::move(next);
    }
    return segs;
}

inline Complex gl_segment(const std::function<Complex(double)>& f, double a, double b,
                          const QuadratureOptions& opt) {
    return tensor_gl_integrate({{a, b}}, [&](const std::vector<double>& pt) { return f(pt[0]); }, opt);
}

} // namespace detail

/// ∫_M f dμ_M for catalog subnilmanifolds M (coset convention: points are
/// basepoint·h, h in the subgroup).
///
/// Characters integrate in closed form: zero unless the frequency annihilates
/// the torus-factor projection of M's span, else a basepoint phase — exact
/// integer/rational linear algebra throughout. Piecewise-polynomial factors
/// integrate exactly over the full cube; over one-dimensional cosets the affine
/// parametrization is reduced piecewise and Gauss–Legendre handles each smooth
/// segment (exact for polynomial pieces up to rounding). Remaining mixed cases
/// go through tensor Gauss–Legendre with refinement.
inline Complex integrate(const NilFunction& f, const Subnilmanifold& M,
                         QuadratureOptions opt = {}) {
    const auto& pres = f.presentation();
    if (!pres->same_as(*M.presentation()))
        throw Error(ErrorCode::PresentationMismatch, "function/manifold presentation mismatch", "integrate");
    const int k = pres->dim();
    const auto& tfi = pres->tf_indices();
    IntMat lattice = M.subgroup().lattice_basis();
    const std::size_t r = lattice.size();
    const GroupElement& x0 = M.basepoint();

    Complex total = 0.0;
    for (const auto& term : f.terms()) {
        const bool char_zero = std::all_of(term.freq.begin(), term.freq.end(),
                                           [](const Int& v) { return v == 0; });
        if (term.pp.trivial()) {
            // Closed form: ∏_i [freq·tf(b_i) = 0] · e^{2πi freq·tf(x0)}.
            bool killed = false;
            for (const auto& b : lattice) {
                Int dot = 0;
                for (std::size_t j = 0; j < tfi.size(); ++j) dot += term.freq[j] * b[tfi[j]];
                if (dot != 0) { killed = true; break; }
            }
            if (killed) continue;
            Scalar phase;
            auto tf0 = tf_coords(x0);
            for (std::size_t j = 0; j < tf0.size(); ++j)
                if (term.freq[j] != 0) phase += tf0[j] * Scalar(Rational(term.freq[j]));
            total += term.coeff * unit_phase(scalar_phase_unit(phase));
            continue;
        }

        if (r == 0) {
            // Point mass: the integral is the value at the (reduced) basepoint.
            GroupElement q = reduce_mod_lattice(x0).q;
            Scalar phase;
            auto tfq = tf_coords(q);
            for (std::size_t j = 0; j < tfq.size(); ++j)
                if (term.freq[j] != 0) phase += tfq[j] * Scalar(Rational(term.freq[j]));
            Scalar pv = term.pp.eval(std::span<const Scalar>(q.coords().data(), q.coords().size()));
            total += term.coeff * unit_phase(scalar_phase_unit(phase)) * pv.to_double();
            continue;
        }

        if (static_cast<int>(r) == k) {
            // Full manifold: integrate piece by piece over the cube.
            for (const auto& [box, poly] : term.pp.pieces()) {
                if (char_zero) {
                    total += term.coeff * rational_to_double(poly.integrate_box(box.intervals));
                } else {
                    std::vector<std::pair<double, double>> dbox;
                    for (const auto& [lo, hi] : box.intervals)
                        dbox.emplace_back(rational_to_double(lo), rational_to_double(hi));
                    auto freq = term.freq;
                    Complex piece = tensor_gl_integrate(
                        dbox,
                        [&](const std::vector<double>& u) {
                            double ph = 0;
                            for (std::size_t j = 0; j < tfi.size(); ++j)
                                if (freq[j] != 0) ph += static_cast<double>(freq[j]) * u[tfi[j]];
                            return unit_phase(ph - std::floor(ph)) * poly.eval_double(u);
                        },
                        opt);
                    total += term.coeff * piece;
                }
            }
            continue;
        }

        if (r == 1) {
            // Segmented affine path t ↦ x0 · elt(t·b).
            std::vector<double> c0(k), s0(k);
            for (int i = 0; i < k; ++i) {
                c0[i] = x0.coord(i).to_double();
                s0[i] = static_cast<double>(lattice[0][i]);
            }
            for (const auto& bt : pres->bilinear())
                s0[bt.out] += rational_to_double(bt.coeff) * c0[bt.lhs] *
                              static_cast<double>(lattice[0][bt.rhs]);
            auto segs = detail::reduce_affine_path(pres, c0, s0);
            for (const auto& seg : segs) {
                for (const auto& [box, poly] : term.pp.pieces()) {
                    double ta = seg.t0, tb = seg.t1;
                    for (int i = 0; i < k && ta < tb; ++i) {
                        double lo = rational_to_double(box.intervals[i].first);
                        double hi = rational_to_double(box.intervals[i].second);
                        if (std::abs(seg.s[i]) < 1e-13) {
                            double v = seg.c[i] + seg.s[i] * 0.5 * (ta + tb);
                            if (v < lo || v >= hi) { ta = tb; }
                        } else {
                            double u = (lo - seg.c[i]) / seg.s[i];
                            double v = (hi - seg.c[i]) / seg.s[i];
                            if (u > v) std::swap(u, v);
                            ta = std::max(ta, u);
                            tb = std::min(tb, v);
                        }
                    }
                    if (tb - ta < 1e-13) continue;
                    auto freq = term.freq;
                    const auto& s = seg;
                    Complex piece = detail::gl_segment(
                        [&](double t) {
                            std::vector<double> u(k);
                            for (int i = 0; i < k; ++i) u[i] = s.c[i] + s.s[i] * t;
                            double ph = 0;
                            for (std::size_t j = 0; j < tfi.size(); ++j)
                                if (freq[j] != 0) ph += static_cast<double>(freq[j]) * u[tfi[j]];
                            return unit_phase(ph - std::floor(ph)) * poly.eval_double(u);
                        },
                        ta, tb, opt);
                    total += term.coeff * piece;
                }
            }
            continue;
        }

        // General proper span with piecewise factors: per-node numeric reduction.
        {
            std::vector<std::pair<double, double>> tbox(r, {0.0, 1.0});
            std::vector<double> base(k);
            for (int i = 0; i < k; ++i) base[i] = x0.coord(i).to_double();
            NilFunction single(pres);
            single.add_term(term);
            Complex piece = tensor_gl_integrate(
                tbox,
                [&](const std::vector<double>& t) {
                    std::vector<double> v(k, 0.0);
                    for (std::size_t j = 0; j < r; ++j)
                        for (int i = 0; i < k; ++i)
                            v[i] += t[j] * static_cast<double>(lattice[j][i]);
                    // u = x0 · elt(v)
                    std::vector<double> u(k);
                    for (int i = 0; i < k; ++i) u[i] = base[i] + v[i];
                    for (const auto& bt : pres->bilinear())
                        u[bt.out] += rational_to_double(bt.coeff) * base[bt.lhs] * v[bt.rhs];
                    detail::reduce_double_coords(pres, u);
                    return single.eval_at_double(u);
                },
                opt);
            total += piece;
        }
    }
    return total;
}

} // namespace nilcorr
