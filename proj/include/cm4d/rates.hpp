#pragma once

// Achievable rates: capacity, MI, GMI and per-bit MIs.

#include "cm4d/channel.hpp"
#include "cm4d/demapper.hpp"
#include "cm4d/geometry.hpp"

#include <cstdint>
#include <vector>

namespace cm4d {

enum class RateMethod { gauss_hermite, monte_carlo, llr_samples };

const char* to_string(RateMethod m);

/// A rate in bits/symbol. std_error is 0 for quadrature.
struct RateEstimate {
    double value = 0.0;
    double std_error = 0.0;
    RateMethod method = RateMethod::monte_carlo;
    std::size_t samples_or_nodes = 0;
    std::vector<double> per_bit;       // I(B_k;Y), GMI estimates only
    bool lower_bound_proxy = false;    // GMI computed from max-log LLRs
};

/// 2 log2(1 + gamma/2), the capacity of the 4D AWGN channel.
double capacity_awgn4(double gamma);

/// Gauss-Hermite rule for the weight exp(-t^2).
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

GaussHermiteRule gauss_hermite(int n);

struct McOptions {
    std::size_t samples = 100000;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    /// Use the per-dimension evaluation when the constellation is a product.
    /// The estimator is the same; only the arithmetic differs.
    bool allow_factorized = true;
};

/// MI and GMI estimated on the same samples. Time index n draws its point
/// with draw_index(seed, n, M) and its noise with noise_sample(seed, n, N0), so
/// constellations of equal size share symbol and noise streams.
struct McRates {
    RateEstimate mi;
    RateEstimate gmi;
    /// Standard error of the paired difference MI - GMI.
    double diff_std_error = 0.0;
};

McRates rates_mc(const LabeledConstellation& lc, const SnrPoint& snr, const McOptions& opt);

RateEstimate mi_mc(const Constellation& c, const SnrPoint& snr, const McOptions& opt);
RateEstimate gmi_mc(const LabeledConstellation& lc, const SnrPoint& snr, const McOptions& opt);

/// Quadrature MI of a Cartesian-product constellation: the sum of 1D MIs.
/// Throws std::invalid_argument for non-product input or nodes outside [10, 64].
RateEstimate mi_gh_product(const Constellation& c, const SnrPoint& snr, int nodes = 20);

/// Quadrature GMI when every bit depends on one coordinate of a product
/// constellation.
RateEstimate gmi_gh_product(const LabeledConstellation& lc, const SnrPoint& snr,
                            int nodes = 20);

/// sum_k (1 - E[log2(1 + exp(-(2B-1) L))]) with L under ONE_OVER_ZERO.
RateEstimate gmi_from_llrs(const LlrBlock& llrs);

} // namespace cm4d
