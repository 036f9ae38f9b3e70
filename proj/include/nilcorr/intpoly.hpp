#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "nilcorr/rational.hpp"

namespace nilcorr {

using MultiIndex = std::vector<std::uint32_t>;

namespace detail {
/// Coefficients of C(n, m) as a polynomial in n (degree m, rational coefficients).
inline std::vector<Rational> binomial_monomial_coeffs(unsigned m) {
    // n(n-1)...(n-m+1)/m!
    std::vector<Rational> poly{1};
    for (unsigned j = 0; j < m; ++j) {
        std::vector<Rational> next(poly.size() + 1, Rational(0));
        for (std::size_t i = 0; i < poly.size(); ++i) {
            next[i + 1] += poly[i];
            next[i] -= poly[i] * Rational(j);
        }
        poly = std::move(next);
    }
    Int fact = 1;
    for (unsigned j = 2; j <= m; ++j) fact *= j;
    for (auto& c : poly) c /= Rational(fact);
    return poly;
}
} // namespace detail

/// Integer-valued polynomial ℤ^d → ℤ in the binomial basis Σ c_m ∏ C(n_i, m_i).
class IntPolynomial {
public:
    IntPolynomial() : d_(1) {}
    explicit IntPolynomial(int d) : d_(d) {}

    int dim() const { return d_; }
    const std::map<MultiIndex, Int>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    void set_term(MultiIndex idx, Int coeff) {
        if (idx.size() != static_cast<std::size_t>(d_))
            throw Error(ErrorCode::DimensionMismatch, "term index size != d", "intpoly");
        if (coeff == 0) terms_.erase(idx);
        else terms_[std::move(idx)] = std::move(coeff);
    }

    void add_term(const MultiIndex& idx, const Int& coeff) {
        auto [it, fresh] = terms_.try_emplace(idx, Int(0));
        (void)fresh;
        it->second += coeff;
        if (it->second == 0) terms_.erase(it);
    }

    int degree() const {
        int deg = 0;
        for (const auto& [idx, c] : terms_) {
            int s = 0;
            for (auto m : idx) s += static_cast<int>(m);
            if (s > deg) deg = s;
        }
        return deg;
    }

    Int eval(std::span<const Int> n) const {
        if (n.size() != static_cast<std::size_t>(d_))
            throw Error(ErrorCode::DimensionMismatch, "argument size != d", "intpoly");
        Int acc = 0;
        for (const auto& [idx, c] : terms_) {
            Int t = c;
            for (int i = 0; i < d_ && t != 0; ++i)
                if (idx[i] != 0) t *= binomial_int(n[i], idx[i]);
            acc += t;
        }
        return acc;
    }

    Int eval1(const Int& n) const { return eval(std::span<const Int>(&n, 1)); }

    /// Value at a rational point (binomials extend to ℚ); used for re-parametrized
    /// sequences p((n - i)/k).
    Rational eval_rational(std::span<const Rational> n) const {
        if (n.size() != static_cast<std::size_t>(d_))
            throw Error(ErrorCode::DimensionMismatch, "argument size != d", "intpoly");
        Rational acc = 0;
        for (const auto& [idx, c] : terms_) {
            Rational t(c);
            for (int i = 0; i < d_ && t != 0; ++i)
                if (idx[i] != 0) t *= binomial_rational(n[i], idx[i]);
            acc += t;
        }
        return acc;
    }

    /// Monomial coefficients (rational): coefficient map multi-exponent → coeff.
    std::map<MultiIndex, Rational> to_monomials() const {
        std::map<MultiIndex, Rational> out;
        for (const auto& [idx, c] : terms_) {
            // tensor product of per-variable expansions
            std::map<MultiIndex, Rational> acc;
            acc[MultiIndex(d_, 0)] = Rational(c);
            for (int i = 0; i < d_; ++i) {
                if (idx[i] == 0) continue;
                auto poly = detail::binomial_monomial_coeffs(idx[i]);
                std::map<MultiIndex, Rational> next;
                for (const auto& [e, v] : acc)
                    for (std::size_t p = 0; p < poly.size(); ++p) {
                        if (poly[p] == 0) continue;
                        MultiIndex e2 = e;
                        e2[i] += static_cast<std::uint32_t>(p);
                        auto [it, fresh] = next.try_emplace(std::move(e2), Rational(0));
                        (void)fresh;
                        it->second += v * poly[p];
                    }
                acc = std::move(next);
            }
            for (const auto& [e, v] : acc) {
                auto [it, fresh] = out.try_emplace(e, Rational(0));
                (void)fresh;
                it->second += v;
                if (it->second == 0) out.erase(it);
            }
        }
        return out;
    }

    /// Build from monomial coefficients; the result must be integer-valued
    /// (coefficients in the binomial basis must come out integral).
    /// The binomial coefficient of order m is the finite difference
    /// c_m = Σ_{j ≤ m} (-1)^{|m-j|} ∏ C(m_i, j_i) q(j).
    static IntPolynomial from_monomials(int d, const std::map<MultiIndex, Rational>& monomials) {
        IntPolynomial p(d);
        std::vector<std::uint32_t> maxdeg(d, 0);
        for (const auto& [e, c] : monomials)
            for (int i = 0; i < d; ++i) maxdeg[i] = std::max(maxdeg[i], e[i]);
        std::vector<std::uint32_t> m(d, 0);
        auto q_at = [&](const std::vector<std::uint32_t>& pt) {
            Rational v = 0;
            for (const auto& [e, c] : monomials) {
                Rational t = c;
                for (int i = 0; i < d; ++i)
                    for (std::uint32_t k = 0; k < e[i]; ++k) t *= Rational(pt[i]);
                v += t;
            }
            return v;
        };
        // iterate m over [0..maxdeg]^d
        while (true) {
            // finite difference at 0 of order m
            Rational c = 0;
            std::vector<std::uint32_t> j(d, 0);
            while (true) {
                Rational term = q_at(j);
                long sgn = 0;
                Rational w = 1;
                for (int i = 0; i < d; ++i) {
                    sgn += static_cast<long>(m[i] - j[i]);
                    w *= binomial_rational(Rational(m[i]), j[i]);
                }
                c += ((sgn % 2 == 0) ? term : -term) * w;
                int axis = d - 1;
                while (axis >= 0) {
                    if (j[axis] < m[axis]) { ++j[axis]; break; }
                    j[axis] = 0;
                    --axis;
                }
                if (axis < 0) break;
            }
            if (c != 0) {
                if (!nilcorr::is_integer(c))
                    throw Error(ErrorCode::Validation,
                                "monomial input is not integer-valued (binomial coefficient " +
                                    rational_to_string(c) + ")",
                                "intpoly.from_monomials");
                MultiIndex idx(m.begin(), m.end());
                p.terms_[idx] = rat_num(c);
            }
            int axis = d - 1;
            while (axis >= 0) {
                if (m[axis] < maxdeg[axis]) { ++m[axis]; break; }
                m[axis] = 0;
                --axis;
            }
            if (axis < 0) break;
        }
        return p;
    }

    IntPolynomial operator+(const IntPolynomial& o) const {
        if (d_ != o.d_) throw Error(ErrorCode::DimensionMismatch, "poly dims differ", "intpoly");
        IntPolynomial r = *this;
        for (const auto& [idx, c] : o.terms_) r.add_term(idx, c);
        return r;
    }

    IntPolynomial operator*(const IntPolynomial& o) const {
        if (d_ != o.d_) throw Error(ErrorCode::DimensionMismatch, "poly dims differ", "intpoly");
        // multiply through the monomial representation (exact)
        auto ma = to_monomials();
        auto mb = o.to_monomials();
        std::map<MultiIndex, Rational> prod;
        for (const auto& [ea, ca] : ma)
            for (const auto& [eb, cb] : mb) {
                MultiIndex e(d_);
                for (int i = 0; i < d_; ++i) e[i] = ea[i] + eb[i];
                auto [it, fresh] = prod.try_emplace(std::move(e), Rational(0));
                (void)fresh;
                it->second += ca * cb;
            }
        return from_monomials(d_, prod);
    }

    /// p(scale·m + offset) as a polynomial of m (still integer-valued).
    IntPolynomial compose_affine(const Int& scale, const std::vector<Int>& offset) const {
        auto mono = to_monomials();
        std::map<MultiIndex, Rational> out;
        for (const auto& [e, c] : mono) {
            // expand ∏ (scale·m_i + offset_i)^{e_i}
            std::map<MultiIndex, Rational> acc;
            acc[MultiIndex(d_, 0)] = c;
            for (int i = 0; i < d_; ++i)
                for (std::uint32_t k = 0; k < e[i]; ++k) {
                    std::map<MultiIndex, Rational> next;
                    for (const auto& [f, v] : acc) {
                        MultiIndex f1 = f;
                        f1[i] += 1;
                        auto [it1, fr1] = next.try_emplace(std::move(f1), Rational(0));
                        (void)fr1;
                        it1->second += v * Rational(scale);
                        if (offset[i] != 0) {
                            auto [it0, fr0] = next.try_emplace(f, Rational(0));
                            (void)fr0;
                            it0->second += v * Rational(offset[i]);
                        }
                    }
                    acc = std::move(next);
                }
            for (const auto& [f, v] : acc) {
                auto [it, fresh] = out.try_emplace(f, Rational(0));
                (void)fresh;
                it->second += v;
                if (it->second == 0) out.erase(it);
            }
        }
        return from_monomials(d_, out);
    }

    /// Convenience: p(n) = n_var (d variables).
    static IntPolynomial variable(int d, int var) {
        IntPolynomial p(d);
        MultiIndex idx(d, 0);
        idx[var] = 1;
        p.set_term(idx, 1);
        return p;
    }

    static IntPolynomial constant(int d, Int c) {
        IntPolynomial p(d);
        p.set_term(MultiIndex(d, 0), std::move(c));
        return p;
    }

    friend bool operator==(const IntPolynomial& a, const IntPolynomial& b) {
        return a.d_ == b.d_ && a.terms_ == b.terms_;
    }

private:
    int d_;
    std::map<MultiIndex, Int> terms_;
};

} // namespace nilcorr
