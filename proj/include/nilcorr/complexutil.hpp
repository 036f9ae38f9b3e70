#pragma once

#include <cmath>
#include <complex>
#include <numbers>

namespace nilcorr {

using Complex = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// e^{2πi·turns}
inline Complex unit_phase(double turns) {
    return Complex(std::cos(kTwoPi * turns), std::sin(kTwoPi * turns));
}

} // namespace nilcorr
