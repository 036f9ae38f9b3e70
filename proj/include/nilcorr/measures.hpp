#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <vector>

#include "nilcorr/density.hpp"
#include "nilcorr/scalar.hpp"

namespace nilcorr {

/// Self-similar (IFS) singular part: image measure of maps x ↦ x/s + t_j with
/// weights w_j, total mass `mass`. The middle-thirds Cantor measure is
/// s=3, t ∈ {0, 2/3}, w = (1/2, 1/2).
struct SelfSimilarPart {
    Int contraction = 3; // s ≥ 2
    std::vector<Rational> translations;
    std::vector<double> weights;
    double mass = 1.0;
};

struct FourierValue {
    Complex value;
    double tail_bound = 0.0; // truncation error of the IFS product
};

/// Finite Borel measure on the circle: atoms + trigonometric-polynomial density
/// + optional self-similar singular part.
class TorusMeasure {
public:
    struct Atom {
        Scalar location; // in [0,1)
        double mass;
    };

    TorusMeasure() = default;

    TorusMeasure& add_atom(Scalar location, double mass) {
        if (mass < 0) throw Error(ErrorCode::Validation, "negative atom mass", "measure");
        atoms_.push_back(Atom{std::move(location), mass});
        return *this;
    }

    /// Density Σ_m c_m e^{2πi m x}; must be real and nonnegative as a function
    /// (checked by sampling at construction of the part).
    TorusMeasure& set_ac(std::map<long long, Complex> freqs) {
        for (int i = 0; i <= 512; ++i) {
            double x = i / 512.0;
            Complex v = 0;
            for (const auto& [m, c] : freqs) v += c * unit_phase(m * x - std::floor(m * x));
            if (std::abs(v.imag()) > 1e-9 || v.real() < -1e-9)
                throw Error(ErrorCode::Validation, "density is not a nonnegative real function",
                            "measure.ac");
        }
        ac_ = std::move(freqs);
        return *this;
    }

    TorusMeasure& set_singular(SelfSimilarPart part) {
        if (part.contraction < 2)
            throw Error(ErrorCode::Validation, "contraction denominator must be >= 2", "measure.ifs");
        if (part.translations.size() != part.weights.size() || part.translations.empty())
            throw Error(ErrorCode::Validation, "translations/weights mismatch", "measure.ifs");
        double wsum = 0;
        for (double w : part.weights) {
            if (w < 0) throw Error(ErrorCode::Validation, "negative IFS weight", "measure.ifs");
            wsum += w;
        }
        if (std::abs(wsum - 1.0) > 1e-12)
            throw Error(ErrorCode::Validation, "IFS weights must sum to 1", "measure.ifs");
        singular_ = std::move(part);
        return *this;
    }

    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::map<long long, Complex>& ac() const { return ac_; }
    const std::optional<SelfSimilarPart>& singular() const { return singular_; }

    double atomic_mass() const {
        double m = 0;
        for (const auto& a : atoms_) m += a.mass;
        return m;
    }

    double ac_mass() const {
        auto it = ac_.find(0);
        return it == ac_.end() ? 0.0 : it->second.real();
    }

    double total_mass() const {
        return atomic_mass() + ac_mass() + (singular_ ? singular_->mass : 0.0);
    }

    /// Fourier transform of the atomic part only: the almost periodic component.
    Complex fourier_atomic(const Int& n) const {
        Complex acc = 0;
        for (const auto& a : atoms_) {
            Scalar phase = a.location * Scalar(Rational(-n));
            acc += a.mass * unit_phase(scalar_phase_unit(phase));
        }
        return acc;
    }

    FourierValue fourier_detail(const Int& n) const {
        FourierValue out;
        out.value = fourier_atomic(n);
        // density part: ∫ e^{-2πinx} Σ c_m e^{2πimx} dx = c_n
        if (!ac_.empty()) {
            // only fits long long frequencies by construction
            if (n >= Int(std::numeric_limits<long long>::min()) &&
                n <= Int(std::numeric_limits<long long>::max())) {
                auto it = ac_.find(n.convert_to<long long>());
                if (it != ac_.end()) out.value += it->second;
            }
        }
        if (singular_) {
            // Unrolling φ(ξ) = (Σ_j w_j e^{-2πi ξ t_j})·φ(ξ/s) gives
            // φ(n) = mass · ∏_{k≥0} Σ_j w_j e^{-2πi n t_j / s^k}; factors are
            // dropped once |n|/s^k < 1e-8 (each then differs from 1 by
            // ≤ 2π|n|·max t / s^k) and the tail goes into tail_bound.
            Complex prod = 1.0;
            double ssd = static_cast<double>(singular_->contraction);
            double scale = std::abs(n.convert_to<double>());
            Rational spow = 1;
            int k = 0;
            while (scale / std::pow(ssd, k) >= 1e-8 && k <= 4096) {
                Complex factor = 0;
                for (std::size_t j = 0; j < singular_->translations.size(); ++j) {
                    Rational arg = -Rational(n) * singular_->translations[j] / spow;
                    factor += singular_->weights[j] * unit_phase(rational_to_double(frac_part(arg)));
                }
                prod *= factor;
                ++k;
                spow *= Rational(singular_->contraction);
            }
            // Σ_{j≥k} 2π|n|/s^j = 2π·(|n|/s^k)·s/(s-1)
            double tail = kTwoPi * (scale / std::pow(ssd, k)) * ssd / (ssd - 1.0);
            out.value += singular_->mass * prod;
            out.tail_bound = std::abs(singular_->mass) * (std::exp(tail) - 1.0);
        }
        return out;
    }

    /// φ(n) = ∫ e^{-2πinx} dρ(x).
    Complex fourier(const Int& n) const { return fourier_detail(n).value; }

private:
    std::vector<Atom> atoms_;
    std::map<long long, Complex> ac_;
    std::optional<SelfSimilarPart> singular_;
};

struct WienerDecomposition {
    SequenceHandle almost_periodic; // Fourier transform of the atomic part
    SequenceHandle residual;        // fourier − almost_periodic; null by the theory
};

/// Splits the Fourier transform into the almost periodic part (atoms) and the
/// residual; the theory guarantees the residual is a null-sequence and the
/// caller verifies it with null_diagnostic.
inline WienerDecomposition wiener_decompose(const TorusMeasure& mu) {
    auto m = std::make_shared<TorusMeasure>(mu);
    SequenceHandle ap(1, m->atomic_mass(),
                      [m](std::span<const Int> n) { return m->fourier_atomic(n[0]); });
    SequenceHandle res(1, m->total_mass() + m->atomic_mass(), [m](std::span<const Int> n) {
        return m->fourier(n[0]) - m->fourier_atomic(n[0]);
    });
    return WienerDecomposition{std::move(ap), std::move(res)};
}

inline SequenceHandle fourier_sequence(const TorusMeasure& mu) {
    auto m = std::make_shared<TorusMeasure>(mu);
    return SequenceHandle(1, m->total_mass(),
                          [m](std::span<const Int> n) { return m->fourier(n[0]); });
}

/// Product measure over d parameter directions: the catalog case where the d
/// commuting translations are sampled independently.
class ProductMeasure {
public:
    explicit ProductMeasure(std::vector<TorusMeasure> factors) : factors_(std::move(factors)) {}
    int dim() const { return static_cast<int>(factors_.size()); }
    const std::vector<TorusMeasure>& factors() const { return factors_; }

    Complex fourier(std::span<const Int> n) const {
        if (n.size() != factors_.size())
            throw Error(ErrorCode::DimensionMismatch, "fourier_product argument dim", "fourier_product");
        Complex acc = 1.0;
        for (std::size_t i = 0; i < factors_.size(); ++i) acc *= factors_[i].fourier(n[i]);
        return acc;
    }

private:
    std::vector<TorusMeasure> factors_;
};

inline Complex fourier_product(const ProductMeasure& mu, std::span<const Int> n) {
    return mu.fourier(n);
}

} // namespace nilcorr
