#pragma once

// Memoryless 4D AWGN channel and SNR bookkeeping.

#include "cm4d/geometry.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace cm4d {

/// Consistent (Es, N0, gamma, eta, Eb/N0) bundle; gamma = Es/N0 and
/// Eb/N0 = gamma/eta.
struct SnrPoint {
    double es = 1.0;
    double n0 = 1.0;
    double gamma = 1.0;
    double eta = 1.0;
    double ebn0 = 1.0;

    double gamma_db() const;
    double ebn0_db() const;
};

SnrPoint snr_point(double gamma_db, double eta, double es = 1.0);

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double v) { return 10.0 * std::log10(v); }

/// Row-major binary matrix.
struct BitMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> data;

    BitMatrix() = default;
    BitMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0) {}
    std::uint8_t& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    std::uint8_t operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// A run of transmitted symbols. first_index is the global time index of the
/// first symbol; noise is keyed on the global index so blocks can be split
/// arbitrarily without changing any sample.
struct SymbolBlock {
    std::vector<Point4> symbols;
    std::vector<std::size_t> source_indices;
    std::uint64_t first_index = 0;

    std::size_t size() const noexcept { return symbols.size(); }
};

/// Noise vector for global time index `index`: four N(0, n0/2) components.
Point4 noise_sample(std::uint64_t seed, std::uint64_t index, double n0);

/// Y = X + Z with independent zero-mean Gaussian Z of variance n0/2 per
/// dimension. Output depends only on (block, snr, seed).
std::vector<Point4> transmit(const SymbolBlock& block, const SnrPoint& snr, std::uint64_t seed,
                             std::size_t workers = 1);

struct DrawnSymbols {
    SymbolBlock block;
    BitMatrix bits; // Ns x m, row n is the word of the drawn point
};

/// Index of the uniformly drawn point for global time index `index`.
std::size_t draw_index(std::uint64_t seed, std::uint64_t index, std::size_t M);

DrawnSymbols draw_uniform_symbols(const LabeledConstellation& lc, std::size_t Ns,
                                  std::uint64_t seed, std::uint64_t first_index = 0);

/// Maps an Ns x m bit matrix to symbols through the labeling.
SymbolBlock map_bits(const LabeledConstellation& lc, const BitMatrix& bits,
                     std::uint64_t first_index = 0);

} // namespace cm4d
