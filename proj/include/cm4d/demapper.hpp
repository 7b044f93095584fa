#pragma once

// Soft demapping: per-bit LLRs, hard decisions and pre-FEC BER.

#include "cm4d/channel.hpp"
#include "cm4d/geometry.hpp"

#include <span>
#include <vector>

namespace cm4d {

/// ONE_OVER_ZERO: log f(y|1)/f(y|0), positive favours bit 1.
enum class LlrConvention { one_over_zero, zero_over_one };

enum class LlrKind { exact, maxlog };

struct LlrBlock {
    std::size_t ns = 0;
    std::size_t m = 0;
    std::vector<double> llrs;  // ns x m, row-major
    BitMatrix true_bits;       // ns x m, or empty when unknown
    LlrConvention convention = LlrConvention::one_over_zero;
    LlrKind kind = LlrKind::exact;

    double operator()(std::size_t n, std::size_t k) const { return llrs[n * m + k]; }
    /// LLR of symbol n, bit k expressed under ONE_OVER_ZERO.
    double one_over_zero(std::size_t n, std::size_t k) const
    {
        const double v = llrs[n * m + k];
        return convention == LlrConvention::one_over_zero ? v : -v;
    }
};

struct BerStats {
    double ber_pre = 0.0;
    std::size_t bit_errors = 0;
    std::size_t bits_counted = 0;
};

/// Log-sum-exp LLRs over S_{k,1} and S_{k,0}; stable at any SNR.
LlrBlock exact_llrs(std::span<const Point4> received, const LabeledConstellation& lc,
                    const SnrPoint& snr, LlrConvention convention, BitMatrix true_bits = {},
                    std::size_t workers = 1);

/// Nearest-point approximation: (min_{S_{k,0}} |y-s|^2 - min_{S_{k,1}} |y-s|^2) / N0.
LlrBlock maxlog_llrs(std::span<const Point4> received, const LabeledConstellation& lc,
                     const SnrPoint& snr, LlrConvention convention, BitMatrix true_bits = {},
                     std::size_t workers = 1);

/// Exact LLRs computed one dimension at a time. Requires a Cartesian-product
/// constellation in which every bit depends on a single coordinate; throws
/// std::invalid_argument otherwise.
LlrBlock factorized_llrs(std::span<const Point4> received, const LabeledConstellation& lc,
                         const SnrPoint& snr, LlrConvention convention, BitMatrix true_bits = {},
                         std::size_t workers = 1);

/// Bit decisions: 1 iff the LLR favours bit 1 strictly; an LLR of exactly 0
/// decides 0.
BitMatrix hard_decisions(const LlrBlock& llrs);

/// Fraction of hard decisions that differ from the true bits.
BerStats prefec_ber(const LlrBlock& llrs);

/// log(sum_i exp(v_i)) over the given values, -inf for an empty set.
double log_sum_exp(std::span<const double> v);

} // namespace cm4d
