#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "nilcorr/nilfunc.hpp"

namespace nilcorr {

/// Deterministic 64-bit generator (stable across platforms and runs — CSV
/// outputs must be byte-identical for a fixed seed).
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    /// Uniform in [0, bound) by rejection (unbiased, deterministic).
    std::uint64_t bounded(std::uint64_t bound) {
        if (bound == 0) return 0;
        std::uint64_t threshold = (~bound + 1) % bound;
        while (true) {
            std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }
    std::int64_t symmetric(std::int64_t magnitude) {
        std::uint64_t span = 2 * static_cast<std::uint64_t>(magnitude) + 1;
        return static_cast<std::int64_t>(bounded(span)) - magnitude;
    }

private:
    std::uint64_t state_;
};

/// Følner box ∏ [b_i, b_i + N).
struct FolnerBox {
    std::vector<Int> base;
    long long side = 1;
};

enum class AverageMode { Plain, Abs, Abs2 };

/// (1/N^d) Σ_{n ∈ box} s(n), |s(n)| or |s(n)|²; fixed lexicographic order with
/// compensated summation, so results are independent of any parallel split.
inline Complex box_average(const SequenceHandle& s, const FolnerBox& box, AverageMode mode) {
    const int d = s.dim();
    if (static_cast<int>(box.base.size()) != d)
        throw Error(ErrorCode::DimensionMismatch, "box base dim != sequence dim", "box_average");
    if (box.side < 1) throw Error(ErrorCode::Validation, "box side must be >= 1", "box_average");
    std::vector<Int> n = box.base;
    std::vector<long long> off(d, 0);
    double sum_re = 0, comp_re = 0, sum_im = 0, comp_im = 0;
    auto add = [&](double v, double& sum, double& comp) {
        double y = v - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    };
    while (true) {
        Complex v = s.eval(n);
        switch (mode) {
            case AverageMode::Plain:
                add(v.real(), sum_re, comp_re);
                add(v.imag(), sum_im, comp_im);
                break;
            case AverageMode::Abs: add(std::abs(v), sum_re, comp_re); break;
            case AverageMode::Abs2: add(std::norm(v), sum_re, comp_re); break;
        }
        int axis = d - 1;
        while (axis >= 0) {
            if (++off[axis] < box.side) {
                n[axis] += 1;
                break;
            }
            n[axis] = box.base[axis];
            off[axis] = 0;
            --axis;
        }
        if (axis < 0) break;
    }
    double cells = std::pow(static_cast<double>(box.side), d);
    if (mode == AverageMode::Plain) return Complex(sum_re, sum_im) / cells;
    return Complex(sum_re / cells, 0.0);
}

enum class DecayVerdict { Null, NotNull, Inconclusive };

inline const char* verdict_name(DecayVerdict v) {
    switch (v) {
        case DecayVerdict::Null: return "null";
        case DecayVerdict::NotNull: return "not-null";
        case DecayVerdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

struct DecayReport {
    std::vector<long long> schedule;
    std::vector<double> worst_avg;       // max over sampled bases, per N
    DecayVerdict verdict = DecayVerdict::Inconclusive;
    double threshold = 0.05;
    std::vector<std::vector<Int>> bases_used;
};

struct BasesSpec {
    bool include_zero = true;
    int random_count = 8;
    long long max_magnitude = 1000000;
    std::vector<std::vector<Int>> adversarial;
    std::uint64_t seed = 0;
};

/// Uniform-density decay verdict from worst-case box averages of |s| over
/// translated boxes. A verdict, not a proof: null needs a factor-2 decay across
/// the schedule and a final value under the threshold.
inline DecayReport null_diagnostic(const SequenceHandle& s, std::vector<long long> schedule,
                                   const BasesSpec& bases = {}, double threshold = 0.05,
                                   AverageMode mode = AverageMode::Abs) {
    if (schedule.empty() || !std::is_sorted(schedule.begin(), schedule.end()))
        throw Error(ErrorCode::Validation, "schedule must be increasing and nonempty", "null_diagnostic");
    const int d = s.dim();
    DecayReport report;
    report.schedule = schedule;
    report.threshold = threshold;

    if (bases.include_zero) report.bases_used.push_back(std::vector<Int>(d, Int(0)));
    SplitMix64 rng(bases.seed);
    for (int i = 0; i < bases.random_count; ++i) {
        std::vector<Int> b(d);
        for (int j = 0; j < d; ++j) b[j] = Int(rng.symmetric(bases.max_magnitude));
        report.bases_used.push_back(std::move(b));
    }
    for (const auto& b : bases.adversarial) {
        if (static_cast<int>(b.size()) != d)
            throw Error(ErrorCode::DimensionMismatch, "adversarial base dim != d", "null_diagnostic");
        report.bases_used.push_back(b);
    }

    for (long long n : schedule) {
        double worst = 0;
        for (const auto& b : report.bases_used) {
            Complex avg = box_average(s, FolnerBox{b, n}, mode);
            // Abs/Abs2 averages are real and nonnegative; Plain mode scores the
            // magnitude of the complex average (uniform Cesàro decay).
            worst = std::max(worst, mode == AverageMode::Plain ? std::abs(avg) : avg.real());
        }
        report.worst_avg.push_back(worst);
    }

    const double first = report.worst_avg.front();
    const double last = report.worst_avg.back();
    const bool decayed = last < 1e-12 || (first > 0 && last <= first / 2);
    if (decayed && last < threshold)
        report.verdict = DecayVerdict::Null;
    else if (last > 2 * threshold && !(first > 0 && last <= first / 2))
        report.verdict = DecayVerdict::NotNull;
    else
        report.verdict = DecayVerdict::Inconclusive;
    return report;
}

} // namespace nilcorr
