#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nilcorr/irrational_basis.hpp"
#include "nilcorr/rational.hpp"

namespace nilcorr {

/// Exact symbolic value q0 + Σ q_μ · β^μ over an IrrationalBasis.
///
/// Monomials μ are multisets of symbol indices (sorted vectors), so the type is
/// closed under multiplication; plain q0 + Σ q_i β_i values keep single-index
/// monomials. Equality is exact coefficient equality. Numeric questions
/// (floor, comparisons, phases) descend to the 50-digit witnesses with an
/// ambiguity guard.
class Scalar {
public:
    using Monomial = std::vector<std::uint32_t>; // sorted symbol indices with multiplicity

    Scalar() = default;
    /*implicit*/ Scalar(const Rational& q0) { set_coeff({}, q0); }
    /*implicit*/ Scalar(const Int& n) { set_coeff({}, Rational(n)); }
    /*implicit*/ Scalar(long long n) { set_coeff({}, Rational(n)); }

    static Scalar rational(const Rational& q0) { return Scalar(q0); }

    /// q0 + coeff·β_index
    static Scalar basis_element(BasisPtr basis, std::size_t index, const Rational& coeff = 1,
                                const Rational& q0 = 0) {
        Scalar s;
        s.basis_ = std::move(basis);
        if (!s.basis_ || index >= s.basis_->size())
            throw Error(ErrorCode::Validation, "basis index out of range", "scalar");
        s.set_coeff({}, q0);
        s.set_coeff({static_cast<std::uint32_t>(index)}, coeff);
        return s;
    }

    /// coeff·∏β over a sorted multiset of symbol indices.
    static Scalar monomial(BasisPtr basis, Monomial mono, const Rational& coeff) {
        Scalar s;
        if (!mono.empty()) {
            s.basis_ = std::move(basis);
            if (!s.basis_)
                throw Error(ErrorCode::Validation, "monomial needs a basis", "scalar");
            for (auto idx : mono)
                if (idx >= s.basis_->size())
                    throw Error(ErrorCode::Validation, "basis index out of range", "scalar");
        }
        s.set_coeff(mono, coeff);
        return s;
    }

    const BasisPtr& basis() const { return basis_; }
    bool is_rational() const {
        for (const auto& [mono, c] : terms_)
            if (!mono.empty() && c != 0) return false;
        return true;
    }
    bool is_integer() const { return is_rational() && nilcorr::is_integer(q0()); }
    bool is_zero() const { return terms_.empty(); }

    Rational q0() const {
        auto it = terms_.find(Monomial{});
        return it == terms_.end() ? Rational(0) : it->second;
    }

    const std::map<Monomial, Rational>& terms() const { return terms_; }

    Scalar operator-() const {
        Scalar r = *this;
        for (auto& [mono, c] : r.terms_) c = -c;
        return r;
    }

    Scalar& operator+=(const Scalar& o) {
        merge_basis(o);
        for (const auto& [mono, c] : o.terms_) add_coeff(mono, c);
        return *this;
    }
    Scalar& operator-=(const Scalar& o) {
        merge_basis(o);
        for (const auto& [mono, c] : o.terms_) add_coeff(mono, -c);
        return *this;
    }
    Scalar& operator*=(const Scalar& o) {
        merge_basis(o);
        std::map<Monomial, Rational> out;
        for (const auto& [ma, ca] : terms_)
            for (const auto& [mb, cb] : o.terms_) {
                Monomial m = ma;
                m.insert(m.end(), mb.begin(), mb.end());
                std::sort(m.begin(), m.end());
                auto [it, fresh] = out.try_emplace(std::move(m), Rational(0));
                (void)fresh;
                it->second += ca * cb;
            }
        terms_ = std::move(out);
        normalize();
        return *this;
    }
    Scalar& operator*=(const Rational& r) {
        if (r == 0) { terms_.clear(); return *this; }
        for (auto& [mono, c] : terms_) c *= r;
        return *this;
    }
    Scalar& operator/=(const Rational& r) {
        if (r == 0) throw Error(ErrorCode::Validation, "division by zero", "scalar");
        for (auto& [mono, c] : terms_) c /= r;
        return *this;
    }

    friend Scalar operator+(Scalar a, const Scalar& b) { return a += b; }
    friend Scalar operator-(Scalar a, const Scalar& b) { return a -= b; }
    friend Scalar operator*(Scalar a, const Scalar& b) { return a *= b; }
    friend Scalar operator*(Scalar a, const Rational& b) { return a *= b; }
    friend Scalar operator*(const Rational& a, Scalar b) { return b *= a; }
    friend Scalar operator/(Scalar a, const Rational& b) { return a /= b; }

    friend bool operator==(const Scalar& a, const Scalar& b) { return a.terms_ == b.terms_; }
    friend bool operator!=(const Scalar& a, const Scalar& b) { return !(a == b); }
    friend bool operator<(const Scalar& a, const Scalar& b) { return a.terms_ < b.terms_; }

    BigFloat to_bigfloat() const {
        BigFloat acc = 0;
        for (const auto& [mono, c] : terms_) {
            BigFloat t = rational_to_bigfloat(c);
            for (auto idx : mono) {
                if (!basis_) throw Error(ErrorCode::Validation, "irrational term without basis", "scalar");
                t *= basis_->witness(idx);
            }
            acc += t;
        }
        return acc;
    }

    double to_double() const {
        if (is_rational()) return rational_to_double(q0());
        return static_cast<double>(to_bigfloat());
    }

    /// Exact floor for rationals; witness floor with a 1e-15 ambiguity guard otherwise.
    Int floor() const {
        if (is_rational()) return floor_int(q0());
        BigFloat w = to_bigfloat();
        BigFloat fl = boost::multiprecision::floor(w);
        BigFloat nearest = boost::multiprecision::round(w);
        BigFloat dist = boost::multiprecision::abs(w - nearest);
        if (dist < BigFloat("1e-15"))
            throw Error(ErrorCode::FloorAmbiguous,
                        "witness value " + w.str(25) + " within 1e-15 of an integer "
                        "while the exact part is not an integer");
        return fl.convert_to<Int>(); // fl is exactly integral after floor()
    }

    Scalar fractional() const { return *this - Scalar(Rational(floor())); }

    /// Sign with the same ambiguity guard (-1, 0, +1).
    int sign() const {
        if (is_rational()) {
            Rational q = q0();
            return q == 0 ? 0 : (q > 0 ? 1 : -1);
        }
        BigFloat w = to_bigfloat();
        if (boost::multiprecision::abs(w) < BigFloat("1e-15"))
            throw Error(ErrorCode::FloorAmbiguous, "sign of scalar numerically indistinguishable from zero");
        return w > 0 ? 1 : -1;
    }

    int compare(const Scalar& o) const {
        if (*this == o) return 0;
        return (*this - o).sign();
    }

    std::string to_string() const {
        if (terms_.empty()) return "0";
        std::ostringstream os;
        bool first = true;
        // constant first, then monomials in map order
        Rational c0 = q0();
        if (c0 != 0 || terms_.size() == static_cast<std::size_t>(terms_.count(Monomial{}))) {
            os << rational_to_string(c0);
            first = false;
        }
        for (const auto& [mono, c] : terms_) {
            if (mono.empty()) continue;
            Rational a = c;
            if (!first) {
                os << (a < 0 ? " - " : " + ");
                if (a < 0) a = -a;
            }
            first = false;
            os << rational_to_string(a) << "*" << monomial_name(mono);
        }
        return os.str();
    }

    std::string monomial_name(const Monomial& mono) const {
        std::string s;
        for (std::size_t i = 0; i < mono.size(); ++i) {
            if (i) s += "*";
            s += basis_ ? basis_->symbol(mono[i]) : ("b" + std::to_string(mono[i] + 1));
        }
        return s;
    }

    void set_coeff(const Monomial& mono, const Rational& c) {
        if (c == 0) terms_.erase(mono);
        else terms_[mono] = c;
    }

private:
    void add_coeff(const Monomial& mono, const Rational& c) {
        auto [it, fresh] = terms_.try_emplace(mono, Rational(0));
        (void)fresh;
        it->second += c;
        if (it->second == 0) terms_.erase(it);
    }

    void normalize() {
        for (auto it = terms_.begin(); it != terms_.end();) {
            if (it->second == 0) it = terms_.erase(it);
            else ++it;
        }
    }

    void merge_basis(const Scalar& o) {
        if (!basis_) basis_ = o.basis_;
        else if (o.basis_ && o.basis_ != basis_) {
            // Same basis content from a different load is fine; different content is not.
            if (basis_->symbols() != o.basis_->symbols() ||
                basis_->witness_strings() != o.basis_->witness_strings())
                throw Error(ErrorCode::Validation, "mixing scalars over different irrational bases", "scalar");
        }
    }

    BasisPtr basis_;
    std::map<Monomial, Rational> terms_;
};

/// mod-1 representative in [0,1) — exact on the symbolic level.
inline Scalar mod_one(const Scalar& s) { return s.fractional(); }

/// Parse "q0 + c*b1 - c*b1*b2" (the format to_string produces). Monomial names
/// must be symbols of `basis`; a bare leading rational is the constant part.
inline Scalar scalar_from_string(const std::string& text, const BasisPtr& basis) {
    Scalar out;
    std::size_t pos = 0;
    auto skip_ws = [&] { while (pos < text.size() && text[pos] == ' ') ++pos; };
    bool first = true;
    while (true) {
        skip_ws();
        if (pos >= text.size()) break;
        int sign = 1;
        if (!first || text[pos] == '+' || text[pos] == '-') {
            if (text[pos] == '-') sign = -1;
            else if (text[pos] != '+')
                throw Error(ErrorCode::Validation, "expected +/- in scalar '" + text + "'", "scalar.parse");
            ++pos;
            skip_ws();
        }
        first = false;
        // number part
        std::size_t start = pos;
        while (pos < text.size() && (std::isdigit(static_cast<unsigned char>(text[pos])) ||
                                     text[pos] == '/' || text[pos] == '.' || text[pos] == '-'))
            ++pos;
        if (start == pos)
            throw Error(ErrorCode::Validation, "expected coefficient in scalar '" + text + "'", "scalar.parse");
        Rational coeff = parse_rational(text.substr(start, pos - start), "scalar.parse");
        Scalar::Monomial mono;
        skip_ws();
        while (pos < text.size() && text[pos] == '*') {
            ++pos;
            skip_ws();
            std::size_t s0 = pos;
            while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) ||
                                         text[pos] == '_'))
                ++pos;
            std::string name = text.substr(s0, pos - s0);
            if (!basis)
                throw Error(ErrorCode::Validation, "scalar uses symbol '" + name + "' without a basis",
                            "scalar.parse");
            int idx = basis->find(name);
            if (idx < 0)
                throw Error(ErrorCode::Validation, "undeclared basis symbol '" + name + "'", "scalar.parse");
            mono.push_back(static_cast<std::uint32_t>(idx));
            skip_ws();
        }
        std::sort(mono.begin(), mono.end());
        out += Scalar::monomial(basis, std::move(mono), sign > 0 ? coeff : -coeff);
    }
    return out;
}

inline double scalar_phase_unit(const Scalar& s) {
    // value of s mod 1 as double in [0,1), via witnesses
    if (s.is_rational()) {
        Rational f = frac_part(s.q0());
        return rational_to_double(f);
    }
    BigFloat w = s.to_bigfloat();
    BigFloat f = w - boost::multiprecision::floor(w);
    return static_cast<double>(f);
}

} // namespace nilcorr
