#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <string>

#include "nilcorr/errors.hpp"

namespace nilcorr {

using Int = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Witness precision: 50 decimal digits, comfortably above the spec'd 30.
using BigFloat = boost::multiprecision::cpp_bin_float_50;

inline Int rat_num(const Rational& r) { return boost::multiprecision::numerator(r); }
inline Int rat_den(const Rational& r) { return boost::multiprecision::denominator(r); }

inline bool is_integer(const Rational& r) { return rat_den(r) == 1; }

inline Int floor_int(const Rational& r) {
    Int q = rat_num(r) / rat_den(r);
    if (rat_num(r) < 0 && q * rat_den(r) != rat_num(r)) --q;
    return q;
}

inline Rational frac_part(const Rational& r) { return r - Rational(floor_int(r)); }

/// C(x, m) for rational x: x(x-1)...(x-m+1)/m!.
inline Rational binomial_rational(const Rational& x, unsigned m) {
    Rational acc = 1;
    for (unsigned j = 0; j < m; ++j) acc *= (x - Rational(j));
    Int fact = 1;
    for (unsigned j = 2; j <= m; ++j) fact *= j;
    return acc / Rational(fact);
}

inline Int binomial_int(const Int& n, unsigned m) {
    Rational r = binomial_rational(Rational(n), m);
    return rat_num(r); // denominator is 1 for integer n
}

inline std::string int_to_string(const Int& v) { return v.str(); }

/// "p/q" or "p"; also accepts plain decimal strings like "0.25".
inline Rational parse_rational(const std::string& s, const std::string& where = {}) {
    try {
        auto slash = s.find('/');
        if (slash != std::string::npos) {
            Int p(s.substr(0, slash));
            Int q(s.substr(slash + 1));
            if (q == 0) throw Error(ErrorCode::Validation, "zero denominator in '" + s + "'", where);
            return Rational(p, q);
        }
        auto dot = s.find('.');
        if (dot != std::string::npos) {
            std::string head = s.substr(0, dot), tail = s.substr(dot + 1);
            bool neg = !head.empty() && head[0] == '-';
            Int ipart(head.empty() || head == "-" || head == "+" ? std::string("0") : head);
            Int scale = 1;
            Int fpart = 0;
            for (char c : tail) {
                if (c < '0' || c > '9') throw Error(ErrorCode::Validation, "bad decimal '" + s + "'", where);
                fpart = fpart * 10 + (c - '0');
                scale *= 10;
            }
            Rational r = Rational(ipart) + (neg ? -1 : 1) * Rational(fpart, scale);
            return r;
        }
        return Rational(Int(s));
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        throw Error(ErrorCode::Validation, "cannot parse rational '" + s + "'", where);
    }
}

inline std::string rational_to_string(const Rational& r) {
    if (is_integer(r)) return rat_num(r).str();
    return rat_num(r).str() + "/" + rat_den(r).str();
}

inline double rational_to_double(const Rational& r) { return static_cast<double>(r); }

inline BigFloat rational_to_bigfloat(const Rational& r) {
    return BigFloat(rat_num(r)) / BigFloat(rat_den(r));
}

/// Exact value of a decimal literal (used for witness strings, which must be
/// reproducible bit-for-bit from their textual form).
inline Rational decimal_string_to_rational(const std::string& s, const std::string& where = {}) {
    return parse_rational(s, where);
}

inline Int gcd_int(Int a, Int b) { return boost::multiprecision::gcd(a, b); }
inline Int lcm_int(const Int& a, const Int& b) { return boost::multiprecision::lcm(a, b); }

} // namespace nilcorr
