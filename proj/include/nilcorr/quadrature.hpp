#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <numbers>
#include <vector>

#include "nilcorr/errors.hpp"

namespace nilcorr {

struct QuadratureRule {
    std::vector<double> nodes;   // on [-1, 1]
    std::vector<double> weights;
};

/// Gauss–Legendre rule by Newton iteration on P_n.
inline const QuadratureRule& gauss_legendre(int n) {
    static std::map<int, QuadratureRule> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    QuadratureRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        r.nodes[i] = x;
        r.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return cache.emplace(n, std::move(r)).first->second;
}

struct QuadratureOptions {
    double rel_tol = 1e-10;
    int max_level = 12;          // order at level ℓ is 4·2^ℓ per axis
    std::size_t node_budget = 8'000'000;
};

/// Tensor Gauss–Legendre over a box with successive refinement; the refinement
/// pair (level ℓ-1, ℓ) must agree to rel_tol, else QuadratureNotConverged.
inline std::complex<double> tensor_gl_integrate(
    const std::vector<std::pair<double, double>>& box,
    const std::function<std::complex<double>(const std::vector<double>&)>& f,
    const QuadratureOptions& opt = {}) {
    const int d = static_cast<int>(box.size());
    double volume = 1.0;
    for (const auto& [lo, hi] : box) volume *= (hi - lo);
    if (volume == 0.0) return 0.0;

    std::complex<double> prev = 0.0;
    bool have_prev = false;
    for (int level = 0; level <= opt.max_level; ++level) {
        const int order = 4 << level;
        double count = std::pow(static_cast<double>(order), d);
        if (count > static_cast<double>(opt.node_budget))
            throw Error(ErrorCode::QuadratureNotConverged,
                        "node budget exceeded before reaching tolerance");
        const auto& rule = gauss_legendre(order);
        std::complex<double> acc = 0.0;
        std::vector<int> idx(d, 0);
        std::vector<double> pt(d);
        while (true) {
            double w = 1.0;
            for (int i = 0; i < d; ++i) {
                const auto& [lo, hi] = box[i];
                pt[i] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * rule.nodes[idx[i]];
                w *= 0.5 * (hi - lo) * rule.weights[idx[i]];
            }
            acc += w * f(pt);
            int axis = d - 1;
            while (axis >= 0) {
                if (++idx[axis] < order) break;
                idx[axis] = 0;
                --axis;
            }
            if (axis < 0) break;
        }
        if (have_prev) {
            double scale = std::max({1.0, std::abs(acc), std::abs(prev)});
            if (std::abs(acc - prev) <= opt.rel_tol * scale) return acc;
        }
        prev = acc;
        have_prev = true;
    }
    throw Error(ErrorCode::QuadratureNotConverged,
                "successive refinements did not agree at max level");
}

} // namespace nilcorr
