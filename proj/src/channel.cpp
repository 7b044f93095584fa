#include "cm4d/channel.hpp"

#include "cm4d/parallel.hpp"
#include "cm4d/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace cm4d {

double SnrPoint::gamma_db() const { return linear_to_db(gamma); }
double SnrPoint::ebn0_db() const { return linear_to_db(ebn0); }

SnrPoint snr_point(double gamma_db, double eta, double es)
{
    if (!(eta > 0.0))
        throw std::invalid_argument("spectral efficiency must be positive");
    if (!(es > 0.0))
        throw std::invalid_argument("symbol energy must be positive");
    SnrPoint s;
    s.es = es;
    s.gamma = db_to_linear(gamma_db);
    s.n0 = es / s.gamma;
    s.eta = eta;
    s.ebn0 = s.gamma / eta;
    return s;
}

Point4 noise_sample(std::uint64_t seed, std::uint64_t index, double n0)
{
    const double sigma = std::sqrt(n0 / 2.0);
    const auto a = rng::gaussian_pair(seed, rng::Stream::noise, index, 0);
    const auto b = rng::gaussian_pair(seed, rng::Stream::noise, index, 1);
    return {sigma * a[0], sigma * a[1], sigma * b[0], sigma * b[1]};
}

std::vector<Point4> transmit(const SymbolBlock& block, const SnrPoint& snr, std::uint64_t seed,
                             std::size_t workers)
{
    std::vector<Point4> out(block.size());
    constexpr std::size_t chunk = 4096;
    const std::size_t chunks = (block.size() + chunk - 1) / chunk;
    parallel_for(chunks, workers, [&](std::size_t c) {
        const std::size_t end = std::min(block.size(), (c + 1) * chunk);
        for (std::size_t n = c * chunk; n < end; ++n) {
            const Point4 z = noise_sample(seed, block.first_index + n, snr.n0);
            const Point4& x = block.symbols[n];
            out[n] = {x[0] + z[0], x[1] + z[1], x[2] + z[2], x[3] + z[3]};
        }
    });
    return out;
}

std::size_t draw_index(std::uint64_t seed, std::uint64_t index, std::size_t M)
{
    return static_cast<std::size_t>(rng::uniform_index(seed, rng::Stream::symbols, index, M));
}

DrawnSymbols draw_uniform_symbols(const LabeledConstellation& lc, std::size_t Ns,
                                  std::uint64_t seed, std::uint64_t first_index)
{
    if (Ns < 1)
        throw std::invalid_argument("block length must be >= 1");
    const int m = lc.m();
    DrawnSymbols out{SymbolBlock{{}, {}, first_index}, BitMatrix(Ns, static_cast<std::size_t>(m))};
    out.block.symbols.reserve(Ns);
    out.block.source_indices.reserve(Ns);
    for (std::size_t n = 0; n < Ns; ++n) {
        const std::size_t i = draw_index(seed, first_index + n, lc.size());
        out.block.symbols.push_back(lc.constellation()[i]);
        out.block.source_indices.push_back(i);
        for (int k = 0; k < m; ++k)
            out.bits(n, k) = static_cast<std::uint8_t>(lc.labeling().bit(i, k));
    }
    return out;
}

SymbolBlock map_bits(const LabeledConstellation& lc, const BitMatrix& bits,
                     std::uint64_t first_index)
{
    if (bits.cols != static_cast<std::size_t>(lc.m()))
        throw std::invalid_argument("bit matrix width does not match bits per symbol");
    SymbolBlock block{{}, {}, first_index};
    block.symbols.reserve(bits.rows);
    block.source_indices.reserve(bits.rows);
    for (std::size_t n = 0; n < bits.rows; ++n) {
        std::uint32_t w = 0;
        for (std::size_t k = 0; k < bits.cols; ++k)
            w = (w << 1) | bits(n, k);
        const std::size_t i = lc.labeling().index_of(w);
        block.symbols.push_back(lc.constellation()[i]);
        block.source_indices.push_back(i);
    }
    return block;
}

} // namespace cm4d
