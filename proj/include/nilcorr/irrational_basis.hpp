#pragma once

#include <memory>
#include <string>
#include <vector>

#include "nilcorr/rational.hpp"

namespace nilcorr {

/// Named irrational generators β₁..β_m with high-precision decimal witnesses.
/// Exact arithmetic treats the symbols as transcendence-free formal generators;
/// the witnesses make order comparisons and floors decidable at desk scale.
class IrrationalBasis {
public:
    IrrationalBasis() = default;

    IrrationalBasis(std::vector<std::string> symbols, std::vector<std::string> witness_strings)
        : symbols_(std::move(symbols)), witness_strings_(std::move(witness_strings)) {
        if (symbols_.size() != witness_strings_.size())
            throw Error(ErrorCode::Validation, "symbol/witness count mismatch", "basis");
        witnesses_.reserve(symbols_.size());
        witness_rationals_.reserve(symbols_.size());
        for (std::size_t i = 0; i < symbols_.size(); ++i) {
            if (symbols_[i].empty())
                throw Error(ErrorCode::Validation, "empty basis symbol name", "basis");
            Rational w = decimal_string_to_rational(witness_strings_[i], "basis." + symbols_[i]);
            check_precision(witness_strings_[i], symbols_[i]);
            check_not_near_rational(w, symbols_[i]);
            witness_rationals_.push_back(w);
            witnesses_.push_back(rational_to_bigfloat(w));
        }
        for (std::size_t i = 0; i < symbols_.size(); ++i)
            for (std::size_t j = i + 1; j < symbols_.size(); ++j) {
                if (symbols_[i] == symbols_[j])
                    throw Error(ErrorCode::Validation, "duplicate basis symbol " + symbols_[i], "basis");
                if (witness_rationals_[i] == witness_rationals_[j])
                    throw Error(ErrorCode::Validation,
                                "witnesses for " + symbols_[i] + " and " + symbols_[j] + " coincide", "basis");
            }
    }

    std::size_t size() const { return symbols_.size(); }
    const std::vector<std::string>& symbols() const { return symbols_; }
    const std::vector<std::string>& witness_strings() const { return witness_strings_; }
    const std::string& symbol(std::size_t i) const { return symbols_[i]; }
    const BigFloat& witness(std::size_t i) const { return witnesses_[i]; }

    /// Index of a symbol, or -1.
    int find(const std::string& name) const {
        for (std::size_t i = 0; i < symbols_.size(); ++i)
            if (symbols_[i] == name) return static_cast<int>(i);
        return -1;
    }

private:
    static void check_precision(const std::string& s, const std::string& sym) {
        int digits = 0;
        for (char c : s)
            if (c >= '0' && c <= '9') ++digits;
        if (digits < 30)
            throw Error(ErrorCode::Validation,
                        "witness for " + sym + " has fewer than 30 significant digits", "basis." + sym);
    }

    // Continued-fraction scan: no witness may sit within 1e-20 of p/q with q <= 1e6.
    static void check_not_near_rational(const Rational& w, const std::string& sym) {
        const Int max_den = 1000000;
        const Rational tol(Int(1), Int("100000000000000000000")); // 1e-20
        Rational x = w;
        // Convergents p/q of the continued fraction of w.
        Int p0 = 1, q0 = 0, p1 = floor_int(x), q1 = 1;
        Rational frac = x - Rational(p1);
        auto check = [&](const Int& p, const Int& q) {
            if (q == 0 || q > max_den) return;
            Rational diff = w - Rational(p, q);
            if (diff < 0) diff = -diff;
            if (diff < tol)
                throw Error(ErrorCode::Validation,
                            "witness for " + sym + " is within 1e-20 of " + p.str() + "/" + q.str(),
                            "basis." + sym);
        };
        check(p1, q1);
        for (int iter = 0; iter < 64 && frac != 0; ++iter) {
            x = Rational(1) / frac;
            Int a = floor_int(x);
            frac = x - Rational(a);
            Int p2 = a * p1 + p0, q2 = a * q1 + q0;
            if (q2 > max_den) break;
            check(p2, q2);
            p0 = p1; q0 = q1; p1 = p2; q1 = q2;
        }
    }

    std::vector<std::string> symbols_;
    std::vector<std::string> witness_strings_;
    std::vector<Rational> witness_rationals_;
    std::vector<BigFloat> witnesses_;
};

using BasisPtr = std::shared_ptr<const IrrationalBasis>;

inline BasisPtr make_basis(std::vector<std::string> symbols, std::vector<std::string> witnesses) {
    return std::make_shared<const IrrationalBasis>(std::move(symbols), std::move(witnesses));
}

} // namespace nilcorr
