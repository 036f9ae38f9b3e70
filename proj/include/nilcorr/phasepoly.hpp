#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "nilcorr/complexutil.hpp"
#include "nilcorr/intpoly.hpp"
#include "nilcorr/scalar.hpp"

namespace nilcorr {

/// Polynomial ℤ^d → Scalar in the binomial basis: Σ_μ s_μ ∏ C(n_i, μ_i).
/// The phase polynomials of the decomposition engine live here: every phase of a
/// kept character along g(n) is such a polynomial, which is exactly what makes
/// the nil part a basic polynomial nilsequence on a torus.
class ScalarPoly {
public:
    ScalarPoly() : d_(1) {}
    explicit ScalarPoly(int d) : d_(d) {}

    static ScalarPoly from_intpoly(const IntPolynomial& p, const Scalar& weight) {
        ScalarPoly out(p.dim());
        for (const auto& [idx, c] : p.terms()) out.add_term(idx, weight * Scalar(Rational(c)));
        return out;
    }

    int dim() const { return d_; }
    const std::map<MultiIndex, Scalar>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    void add_term(const MultiIndex& idx, const Scalar& s) {
        if (idx.size() != static_cast<std::size_t>(d_))
            throw Error(ErrorCode::DimensionMismatch, "phase poly index size", "scalarpoly");
        if (s.is_zero()) return;
        auto [it, fresh] = terms_.try_emplace(idx, Scalar());
        (void)fresh;
        it->second += s;
        if (it->second.is_zero()) terms_.erase(it);
    }

    ScalarPoly& operator+=(const ScalarPoly& o) {
        if (d_ != o.d_) throw Error(ErrorCode::DimensionMismatch, "phase poly dims", "scalarpoly");
        for (const auto& [idx, s] : o.terms_) add_term(idx, s);
        return *this;
    }

    ScalarPoly scaled(const Rational& c) const {
        ScalarPoly out(d_);
        if (c == 0) return out;
        for (const auto& [idx, s] : terms_) out.add_term(idx, s * c);
        return out;
    }

    Scalar eval(std::span<const Int> n) const {
        Scalar acc;
        for (const auto& [idx, s] : terms_) {
            Rational b = 1;
            for (int i = 0; i < d_; ++i)
                if (idx[i] != 0) b *= Rational(binomial_int(n[i], idx[i]));
            if (b != 0) acc += s * b;
        }
        return acc;
    }

    /// All coefficients rational (no irrational-basis monomials)?
    bool rational_coefficients() const {
        for (const auto& [idx, s] : terms_)
            if (!s.is_rational()) return false;
        return true;
    }

    /// q(scale·m + offset) in the binomial basis, coefficients stay exact.
    ScalarPoly compose_affine(const Int& scale, const std::vector<Int>& offset) const {
        // expand through per-variable monomials with Scalar coefficients
        std::map<MultiIndex, Scalar> mono;
        for (const auto& [idx, s] : terms_) {
            std::map<MultiIndex, Scalar> acc;
            acc[MultiIndex(d_, 0)] = s;
            for (int i = 0; i < d_; ++i) {
                if (idx[i] == 0) continue;
                auto poly = detail::binomial_monomial_coeffs(idx[i]);
                std::map<MultiIndex, Scalar> next;
                for (const auto& [e, v] : acc)
                    for (std::size_t p = 0; p < poly.size(); ++p) {
                        if (poly[p] == 0) continue;
                        MultiIndex e2 = e;
                        e2[i] += static_cast<std::uint32_t>(p);
                        auto [it, fresh] = next.try_emplace(std::move(e2), Scalar());
                        (void)fresh;
                        it->second += v * Scalar(poly[p]);
                    }
                acc = std::move(next);
            }
            for (const auto& [e, v] : acc) {
                auto [it, fresh] = mono.try_emplace(e, Scalar());
                (void)fresh;
                it->second += v;
            }
        }
        // substitute n_i = scale·m_i + offset_i in monomial form
        std::map<MultiIndex, Scalar> subst;
        for (const auto& [e, v] : mono) {
            std::map<MultiIndex, Scalar> acc;
            acc[MultiIndex(d_, 0)] = v;
            for (int i = 0; i < d_; ++i)
                for (std::uint32_t k = 0; k < e[i]; ++k) {
                    std::map<MultiIndex, Scalar> next;
                    for (const auto& [f, w] : acc) {
                        MultiIndex f1 = f;
                        f1[i] += 1;
                        auto [it1, fr1] = next.try_emplace(std::move(f1), Scalar());
                        (void)fr1;
                        it1->second += w * Scalar(Rational(scale));
                        if (offset[i] != 0) {
                            auto [it0, fr0] = next.try_emplace(f, Scalar());
                            (void)fr0;
                            it0->second += w * Scalar(Rational(offset[i]));
                        }
                    }
                    acc = std::move(next);
                }
            for (const auto& [f, w] : acc) {
                auto [it, fresh] = subst.try_emplace(f, Scalar());
                (void)fresh;
                it->second += w;
            }
        }
        // monomials back to binomial basis: finite differences at 0
        ScalarPoly out(d_);
        std::vector<std::uint32_t> maxdeg(d_, 0);
        for (const auto& [e, v] : subst)
            for (int i = 0; i < d_; ++i) maxdeg[i] = std::max(maxdeg[i], e[i]);
        auto value_at = [&](const std::vector<std::uint32_t>& pt) {
            Scalar acc;
            for (const auto& [e, v] : subst) {
                Rational t = 1;
                for (int i = 0; i < d_; ++i)
                    for (std::uint32_t k = 0; k < e[i]; ++k) t *= Rational(pt[i]);
                acc += v * t;
            }
            return acc;
        };
        std::vector<std::uint32_t> m(d_, 0);
        while (true) {
            Scalar c;
            std::vector<std::uint32_t> j(d_, 0);
            while (true) {
                long sgn = 0;
                Rational w = 1;
                for (int i = 0; i < d_; ++i) {
                    sgn += static_cast<long>(m[i] - j[i]);
                    w *= binomial_rational(Rational(m[i]), j[i]);
                }
                Scalar term = value_at(j) * w;
                c += (sgn % 2 == 0) ? term : -term;
                int axis = d_ - 1;
                while (axis >= 0) {
                    if (j[axis] < m[axis]) { ++j[axis]; break; }
                    j[axis] = 0;
                    --axis;
                }
                if (axis < 0) break;
            }
            if (!c.is_zero()) out.add_term(MultiIndex(m.begin(), m.end()), c);
            int axis = d_ - 1;
            while (axis >= 0) {
                if (m[axis] < maxdeg[axis]) { ++m[axis]; break; }
                m[axis] = 0;
                --axis;
            }
            if (axis < 0) break;
        }
        return out;
    }

    friend bool operator==(const ScalarPoly& a, const ScalarPoly& b) {
        return a.d_ == b.d_ && a.terms_ == b.terms_;
    }
    friend bool operator<(const ScalarPoly& a, const ScalarPoly& b) {
        if (a.d_ != b.d_) return a.d_ < b.d_;
        return a.terms_ < b.terms_;
    }

private:
    int d_;
    std::map<MultiIndex, Scalar> terms_;
};

namespace phasedetail {

/// Root-of-unity table for one denominator; values on the axes are snapped
/// exact, so rational phases like n/2 produce exactly ±1.
inline std::shared_ptr<const std::vector<Complex>> unity_table(long den) {
    static std::map<long, std::shared_ptr<const std::vector<Complex>>> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(den);
    if (it != cache.end()) return it->second;
    auto tab = std::make_shared<std::vector<Complex>>(den);
    for (long i = 0; i < den; ++i) {
        Complex v = unit_phase(static_cast<double>(i) / static_cast<double>(den));
        double re = v.real(), im = v.imag();
        if (std::abs(re) < 4e-16) re = 0.0;
        if (std::abs(im) < 4e-16) im = 0.0;
        if (std::abs(re - 1.0) < 4e-16) re = 1.0;
        if (std::abs(re + 1.0) < 4e-16) re = -1.0;
        if (std::abs(im - 1.0) < 4e-16) im = 1.0;
        if (std::abs(im + 1.0) < 4e-16) im = -1.0;
        (*tab)[i] = Complex(re, im);
    }
    cache.emplace(den, tab);
    return tab;
}

} // namespace phasedetail

/// e^{2πi s} with an exact integer-arithmetic path for rational s (per-denominator
/// root-of-unity tables) and the witness path otherwise.
inline Complex scalar_unit_phase(const Scalar& s) {
    if (s.is_rational()) {
        Rational q = s.q0();
        Int den = rat_den(q);
        if (den <= 2000000) {
            auto tab = phasedetail::unity_table(den.convert_to<long>());
            Int num = rat_num(q) % den;
            if (num < 0) num += den;
            return (*tab)[num.convert_to<long>()];
        }
        return unit_phase(rational_to_double(frac_part(q)));
    }
    return unit_phase(scalar_phase_unit(s));
}

/// Pre-compiled evaluator for e^{2πi q(n)}: rational binomial terms go through
/// per-term root-of-unity tables with native integer arithmetic when the inputs
/// are small; irrational terms go through the witnesses. Exact either way.
class CompiledPhase {
public:
    CompiledPhase() = default;

    explicit CompiledPhase(const ScalarPoly& q) : d_(q.dim()) {
        for (const auto& [idx, s] : q.terms()) {
            int total = 0;
            for (auto m : idx) total += static_cast<int>(m);
            if (s.is_rational()) {
                RTerm t;
                t.idx = idx;
                t.num = rat_num(s.q0());
                t.den = rat_den(s.q0());
                t.order = total;
                if (t.den <= 2000000 && boost::multiprecision::abs(t.num) <= 2000000 && total <= 4) {
                    t.small = true;
                    t.num_ll = t.num.convert_to<long long>();
                    t.den_ll = t.den.convert_to<long long>();
                    t.table = phasedetail::unity_table(static_cast<long>(t.den_ll));
                }
                rational_.push_back(std::move(t));
            } else {
                scalar_.emplace_back(idx, s);
            }
        }
    }

    bool pure_rational() const { return scalar_.empty(); }

    /// e^{2πi q(n)}; `small` carries the int64 image of n when every entry fits.
    Complex unit(std::span<const Int> n, const long long* small) const {
        Complex acc(1.0, 0.0);
        for (const auto& t : rational_) {
            if (t.small && small) {
                __int128 c = 1;
                for (int i = 0; i < d_; ++i)
                    if (t.idx[i] != 0) c *= binom_ll(small[i], t.idx[i]);
                __int128 num = (c % t.den_ll) * (t.num_ll % t.den_ll) % t.den_ll;
                long long r = static_cast<long long>(num % t.den_ll);
                if (r < 0) r += t.den_ll;
                acc *= (*t.table)[static_cast<std::size_t>(r)];
            } else {
                Int c = t.num;
                for (int i = 0; i < d_; ++i)
                    if (t.idx[i] != 0) c *= binomial_int(n[i], t.idx[i]);
                Int r = c % t.den;
                if (r < 0) r += t.den;
                if (t.den <= 2000000) {
                    auto tab = t.table ? t.table : phasedetail::unity_table(t.den.convert_to<long>());
                    acc *= (*tab)[r.convert_to<std::size_t>()];
                } else {
                    acc *= unit_phase(rational_to_double(Rational(r, t.den)));
                }
            }
        }
        if (!scalar_.empty()) {
            Scalar sum;
            for (const auto& [idx, s] : scalar_) {
                Rational b = 1;
                for (int i = 0; i < d_; ++i)
                    if (idx[i] != 0) b *= Rational(binomial_int(n[i], idx[i]));
                if (b != 0) sum += s * b;
            }
            acc *= unit_phase(scalar_phase_unit(sum));
        }
        return acc;
    }

private:
    static __int128 binom_ll(long long n, unsigned m) {
        __int128 acc = 1;
        for (unsigned j = 0; j < m; ++j) acc *= (static_cast<__int128>(n) - j);
        for (unsigned j = 2; j <= m; ++j) acc /= j;
        return acc;
    }

    struct RTerm {
        MultiIndex idx;
        Int num, den;
        long long num_ll = 0, den_ll = 1;
        int order = 0;
        bool small = false;
        std::shared_ptr<const std::vector<Complex>> table;
    };

    int d_ = 1;
    std::vector<RTerm> rational_;
    std::vector<std::pair<MultiIndex, Scalar>> scalar_;
};

/// int64 image of n if every coordinate fits comfortably (|n| ≤ 2e6).
inline bool to_small(std::span<const Int> n, std::vector<long long>& out) {
    out.resize(n.size());
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (n[i] > 2000000 || n[i] < -2000000) return false;
        out[i] = n[i].convert_to<long long>();
    }
    return true;
}

} // namespace nilcorr
