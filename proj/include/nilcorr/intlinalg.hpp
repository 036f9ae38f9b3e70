#pragma once

#include <cstddef>
#include <vector>

#include "nilcorr/rational.hpp"
#include "nilcorr/scalar.hpp"

namespace nilcorr {

using IntRow = std::vector<Int>;
using IntMat = std::vector<IntRow>;      // rows
using RatRow = std::vector<Rational>;
using RatMat = std::vector<RatRow>;

inline IntMat transpose(const IntMat& m) {
    if (m.empty()) return {};
    IntMat t(m[0].size(), IntRow(m.size()));
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m[i].size(); ++j) t[j][i] = m[i][j];
    return t;
}

/// Row-style Hermite normal form (in place, unimodular row operations only).
/// Returns the pivot column of each nonzero row; zero rows sink to the bottom.
inline std::vector<std::size_t> hnf_rows(IntMat& m) {
    std::vector<std::size_t> pivots;
    if (m.empty()) return pivots;
    const std::size_t rows = m.size(), cols = m[0].size();
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        // Euclidean elimination in column c below row r.
        while (true) {
            std::size_t best = rows;
            for (std::size_t i = r; i < rows; ++i)
                if (m[i][c] != 0 && (best == rows || boost::multiprecision::abs(m[i][c]) <
                                                         boost::multiprecision::abs(m[best][c])))
                    best = i;
            if (best == rows) break;
            std::swap(m[r], m[best]);
            bool clean = true;
            for (std::size_t i = r + 1; i < rows; ++i) {
                if (m[i][c] == 0) continue;
                Int q = m[i][c] / m[r][c];
                if (q != 0)
                    for (std::size_t j = 0; j < cols; ++j) m[i][j] -= q * m[r][j];
                if (m[i][c] != 0) clean = false;
            }
            if (clean) break;
        }
        if (m[r][c] == 0) continue;
        if (m[r][c] < 0)
            for (std::size_t j = 0; j < cols; ++j) m[r][j] = -m[r][j];
        // Reduce entries above the pivot into [0, pivot).
        for (std::size_t i = 0; i < r; ++i) {
            Int q = m[i][c] / m[r][c];
            if (m[i][c] - q * m[r][c] < 0) q -= 1;
            if (q != 0)
                for (std::size_t j = 0; j < cols; ++j) m[i][j] -= q * m[r][j];
        }
        pivots.push_back(c);
        ++r;
    }
    m.resize(r); // drop zero rows
    return pivots;
}

/// Basis (rows) of {x ∈ ℤ^n : A·x = 0}, A given by rows (m×n).
inline IntMat kernel_int(const IntMat& a, std::size_t n) {
    // Row-reduce [Aᵀ | I_n]; rows whose Aᵀ-part vanished carry kernel vectors.
    const std::size_t m = a.size();
    IntMat aug(n, IntRow(m + n, 0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) aug[i][j] = (i < a[j].size()) ? a[j][i] : Int(0);
        aug[i][m + i] = 1;
    }
    // HNF on the Aᵀ block only (full rows follow along).
    const std::size_t rows = n;
    std::size_t r = 0;
    for (std::size_t c = 0; c < m && r < rows; ++c) {
        while (true) {
            std::size_t best = rows;
            for (std::size_t i = r; i < rows; ++i)
                if (aug[i][c] != 0 && (best == rows || boost::multiprecision::abs(aug[i][c]) <
                                                           boost::multiprecision::abs(aug[best][c])))
                    best = i;
            if (best == rows) break;
            std::swap(aug[r], aug[best]);
            bool clean = true;
            for (std::size_t i = r + 1; i < rows; ++i) {
                if (aug[i][c] == 0) continue;
                Int q = aug[i][c] / aug[r][c];
                if (q != 0)
                    for (std::size_t j = 0; j < m + n; ++j) aug[i][j] -= q * aug[r][j];
                if (aug[i][c] != 0) clean = false;
            }
            if (clean) break;
        }
        if (aug[r][c] != 0) ++r;
    }
    IntMat ker;
    for (std::size_t i = r; i < rows; ++i) {
        bool zero = true;
        for (std::size_t j = 0; j < m; ++j)
            if (aug[i][j] != 0) { zero = false; break; }
        if (!zero) continue;
        IntRow v(aug[i].begin() + m, aug[i].end());
        bool nz = false;
        for (const auto& x : v) if (x != 0) { nz = true; break; }
        if (nz) ker.push_back(std::move(v));
    }
    hnf_rows(ker);
    return ker;
}

/// Invariant factors (Smith normal form diagonal, nontrivial ones included as-is).
inline std::vector<Int> snf_invariants(IntMat m) {
    std::vector<Int> inv;
    if (m.empty()) return inv;
    std::size_t rows = m.size(), cols = m[0].size();
    std::size_t t = 0;
    while (t < rows && t < cols) {
        // Find a nonzero pivot in the submatrix.
        std::size_t pi = rows, pj = cols;
        for (std::size_t i = t; i < rows && pi == rows; ++i)
            for (std::size_t j = t; j < cols; ++j)
                if (m[i][j] != 0) { pi = i; pj = j; break; }
        if (pi == rows) break;
        std::swap(m[t], m[pi]);
        for (std::size_t i = 0; i < rows; ++i) std::swap(m[i][t], m[i][pj]);
        bool dirty = true;
        while (dirty) {
            dirty = false;
            for (std::size_t i = t + 1; i < rows; ++i)
                while (m[i][t] != 0) {
                    Int q = m[i][t] / m[t][t];
                    for (std::size_t j = t; j < cols; ++j) m[i][j] -= q * m[t][j];
                    if (m[i][t] != 0) { std::swap(m[t], m[i]); dirty = true; }
                }
            for (std::size_t j = t + 1; j < cols; ++j)
                while (m[t][j] != 0) {
                    Int q = m[t][j] / m[t][t];
                    for (std::size_t i = t; i < rows; ++i) m[i][j] -= q * m[i][t];
                    if (m[t][j] != 0) {
                        for (std::size_t i = t; i < rows; ++i) std::swap(m[i][t], m[i][j]);
                        dirty = true;
                    }
                }
        }
        if (m[t][t] < 0) m[t][t] = -m[t][t];
        inv.push_back(m[t][t]);
        ++t;
    }
    // Fix divisibility chain d1 | d2 | ...
    for (std::size_t i = 0; i + 1 < inv.size(); ++i)
        for (std::size_t j = i + 1; j < inv.size(); ++j) {
            Int g = gcd_int(inv[i], inv[j]);
            if (g == 0) continue;
            Int l = inv[i] / g * inv[j];
            inv[i] = g;
            inv[j] = l;
        }
    return inv;
}

/// Reduced row echelon form over ℚ (in place); returns pivot columns.
inline std::vector<std::size_t> rref_rational(RatMat& m) {
    std::vector<std::size_t> pivots;
    if (m.empty()) return pivots;
    std::size_t rows = m.size(), cols = m[0].size(), r = 0;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t p = rows;
        for (std::size_t i = r; i < rows; ++i)
            if (m[i][c] != 0) { p = i; break; }
        if (p == rows) continue;
        std::swap(m[r], m[p]);
        Rational inv = Rational(1) / m[r][c];
        for (std::size_t j = 0; j < cols; ++j) m[r][j] *= inv;
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == r || m[i][c] == 0) continue;
            Rational f = m[i][c];
            for (std::size_t j = 0; j < cols; ++j) m[i][j] -= f * m[r][j];
        }
        pivots.push_back(c);
        ++r;
    }
    m.resize(r);
    return pivots;
}

inline std::size_t rank_rational(RatMat m) { return rref_rational(m).size(); }

/// Clear denominators row by row.
inline IntMat to_integer_rows(const RatMat& m) {
    IntMat out;
    out.reserve(m.size());
    for (const auto& row : m) {
        Int den = 1;
        for (const auto& x : row) den = lcm_int(den, rat_den(x));
        IntRow r;
        r.reserve(row.size());
        for (const auto& x : row) r.push_back(rat_num(x) * (den / rat_den(x)));
        out.push_back(std::move(r));
    }
    return out;
}

inline RatMat to_rational_rows(const IntMat& m) {
    RatMat out;
    out.reserve(m.size());
    for (const auto& row : m) {
        RatRow r;
        r.reserve(row.size());
        for (const auto& x : row) r.emplace_back(x);
        out.push_back(std::move(r));
    }
    return out;
}

/// Integer annihilator lattice {v ∈ ℤ^n : v ⊥ every row of span}.
inline IntMat annihilator_lattice(const RatMat& span, std::size_t n) {
    if (span.empty()) {
        IntMat id(n, IntRow(n, 0));
        for (std::size_t i = 0; i < n; ++i) id[i][i] = 1;
        return id;
    }
    return kernel_int(to_integer_rows(span), n);
}

/// Saturated integer lattice basis of a rational row span: (ℚ·span) ∩ ℤ^n.
inline IntMat saturate_span(const RatMat& span, std::size_t n) {
    IntMat ann = annihilator_lattice(span, n);
    if (ann.empty()) {
        IntMat id(n, IntRow(n, 0));
        for (std::size_t i = 0; i < n; ++i) id[i][i] = 1;
        return id;
    }
    return kernel_int(ann, n);
}

/// {v ∈ ℤ^n : v·col_j ∈ ℤ for every constraint column col_j}, columns of Scalars.
/// Irrational monomial coefficients must cancel exactly; rational parts must land in ℤ.
inline IntMat relation_lattice(const std::vector<std::vector<Scalar>>& columns, std::size_t n) {
    // 1. Kill every irrational monomial coefficient: rational kernel conditions.
    RatMat constraints; // each row: coefficients over v_1..v_n
    for (const auto& col : columns) {
        if (col.size() != n)
            throw Error(ErrorCode::DimensionMismatch, "relation_lattice column size");
        std::map<Scalar::Monomial, RatRow> by_monomial;
        for (std::size_t i = 0; i < n; ++i)
            for (const auto& [mono, c] : col[i].terms()) {
                if (mono.empty()) continue;
                auto [it, fresh] = by_monomial.try_emplace(mono, RatRow(n, Rational(0)));
                (void)fresh;
                it->second[i] += c;
            }
        for (auto& [mono, row] : by_monomial) constraints.push_back(std::move(row));
    }
    IntMat k = constraints.empty() ? IntMat{} : to_integer_rows(constraints);
    IntMat w = k.empty() ? IntMat{} : kernel_int(k, n);
    if (k.empty()) {
        w.assign(n, IntRow(n, 0));
        for (std::size_t i = 0; i < n; ++i) w[i][i] = 1;
    }
    if (w.empty()) return {};
    const std::size_t t = w.size();

    // 2. Inside that kernel, require the rational parts to be integers.
    //    R[t x J]: r_{ij} = w_i · q0(col_j). Solve {x ∈ ℤ^t : x·R ∈ ℤ^J}.
    const std::size_t J = columns.size();
    RatMat r(t, RatRow(J, Rational(0)));
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < J; ++j) {
            Rational acc = 0;
            for (std::size_t c = 0; c < n; ++c) acc += Rational(w[i][c]) * columns[j][c].q0();
            r[i][j] = acc;
        }
    Int d = 1;
    for (const auto& row : r)
        for (const auto& x : row) d = lcm_int(d, rat_den(x));
    IntMat coeff; // rows x over t, from left-kernel of [[P],[D·I_J]]
    {
        IntMat stacked(t + J, IntRow(J, 0));
        for (std::size_t i = 0; i < t; ++i)
            for (std::size_t j = 0; j < J; ++j)
                stacked[i][j] = rat_num(r[i][j]) * (d / rat_den(r[i][j]));
        for (std::size_t j = 0; j < J; ++j) stacked[t + j][j] = d;
        // left kernel of `stacked`: {y : y·stacked = 0} = kernel_int(stackedᵀ).
        IntMat lk = kernel_int(transpose(stacked), t + J);
        for (const auto& y : lk) {
            IntRow x(y.begin(), y.begin() + t);
            bool nz = false;
            for (const auto& v : x) if (v != 0) { nz = true; break; }
            if (nz) coeff.push_back(std::move(x));
        }
        // The left kernel always contains all of ℤ^t composed with y-part when R ≡ 0;
        // HNF keeps the projection a clean lattice basis.
        hnf_rows(coeff);
    }
    // 3. Relations = coeff · w.
    IntMat rel;
    for (const auto& x : coeff) {
        IntRow v(n, 0);
        for (std::size_t i = 0; i < t; ++i)
            for (std::size_t c = 0; c < n; ++c) v[c] += x[i] * w[i][c];
        rel.push_back(std::move(v));
    }
    hnf_rows(rel);
    return rel;
}

/// Solve m = c·basis over ℤ for a saturated lattice basis (rows); throws if not solvable.
inline IntRow express_in_lattice(const IntMat& basis, const IntRow& m) {
    const std::size_t t = basis.size();
    const std::size_t n = m.size();
    RatMat aug(n, RatRow(t + 1, Rational(0)));
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < t; ++i) aug[j][i] = Rational(basis[i][j]);
        aug[j][t] = Rational(m[j]);
    }
    rref_rational(aug);
    IntRow c(t, 0);
    // Back-substitute from rref: each pivot row gives one coefficient.
    for (const auto& row : aug) {
        std::size_t pivot = t + 1;
        for (std::size_t i = 0; i < t; ++i)
            if (row[i] != 0) { pivot = i; break; }
        if (pivot == t + 1) {
            if (row[t] != 0)
                throw Error(ErrorCode::Validation, "vector not in lattice span", "express_in_lattice");
            continue;
        }
        Rational val = row[t];
        if (!nilcorr::is_integer(val))
            throw Error(ErrorCode::Validation, "vector not in integer lattice", "express_in_lattice");
        c[pivot] = rat_num(val);
    }
    return c;
}

inline Rational dot(const RatRow& a, const RatRow& b) {
    Rational acc = 0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) acc += a[i] * b[i];
    return acc;
}

} // namespace nilcorr
