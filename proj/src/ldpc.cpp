#include "cm4d/ldpc.hpp"

#include "cm4d/parallel.hpp"
#include "cm4d/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cm4d {

namespace {

using Words = std::vector<std::uint64_t>;

void set_bit(std::uint64_t* row, std::size_t c) { row[c >> 6] |= std::uint64_t{1} << (c & 63); }
bool get_bit(const std::uint64_t* row, std::size_t c) { return (row[c >> 6] >> (c & 63)) & 1u; }

} // namespace

LdpcCode::LdpcCode(std::size_t n, std::vector<std::vector<std::uint32_t>> rows)
    : n_(n), rows_(std::move(rows))
{
    if (n_ == 0 || rows_.empty())
        throw std::invalid_argument("LDPC code needs variables and checks");
    cols_.assign(n_, {});
    row_start_.push_back(0);
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        auto& row = rows_[r];
        std::sort(row.begin(), row.end());
        if (std::adjacent_find(row.begin(), row.end()) != row.end())
            throw std::invalid_argument("check " + std::to_string(r) + " repeats a variable");
        for (std::uint32_t j : row) {
            if (j >= n_)
                throw std::invalid_argument("check " + std::to_string(r) + " has index out of range");
            cols_[j].push_back(static_cast<std::uint32_t>(r));
            edge_var_.push_back(j);
        }
        row_start_.push_back(static_cast<std::uint32_t>(edge_var_.size()));
    }
    var_edges_.assign(n_, {});
    for (std::size_t e = 0; e < edge_var_.size(); ++e)
        var_edges_[edge_var_[e]].push_back(static_cast<std::uint32_t>(e));

    // Reduced row echelon form with pivots chosen from the last column down,
    // so information bits tend to occupy the leading positions.
    words_per_row_ = (n_ + 63) / 64;
    const std::size_t W = words_per_row_;
    Words h(rows_.size() * W, 0);
    for (std::size_t r = 0; r < rows_.size(); ++r)
        for (std::uint32_t j : rows_[r])
            set_bit(&h[r * W], j);

    std::size_t rank = 0;
    std::vector<std::uint8_t> is_pivot(n_, 0);
    for (std::size_t c = n_; c-- > 0 && rank < rows_.size();) {
        std::size_t p = rank;
        while (p < rows_.size() && !get_bit(&h[p * W], c))
            ++p;
        if (p == rows_.size())
            continue;
        if (p != rank)
            std::swap_ranges(h.begin() + p * W, h.begin() + (p + 1) * W, h.begin() + rank * W);
        const std::uint64_t* prow = &h[rank * W];
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            if (r == rank || !get_bit(&h[r * W], c))
                continue;
            std::uint64_t* dst = &h[r * W];
            for (std::size_t w = 0; w < W; ++w)
                dst[w] ^= prow[w];
        }
        pivot_cols_.push_back(static_cast<std::uint32_t>(c));
        is_pivot[c] = 1;
        ++rank;
    }
    h.resize(rank * W);
    reduced_ = std::move(h);
    for (std::size_t c = 0; c < n_; ++c)
        if (!is_pivot[c])
            info_cols_.push_back(static_cast<std::uint32_t>(c));
    if (info_cols_.empty())
        throw std::invalid_argument("parity-check matrix has full column rank; no information bits");
}

std::span<const std::uint32_t> LdpcCode::row(std::size_t r) const { return rows_[r]; }

std::vector<std::uint8_t> LdpcCode::encode(std::span<const std::uint8_t> info) const
{
    if (info.size() != k())
        throw std::invalid_argument("encode expects k = " + std::to_string(k()) + " bits");
    const std::size_t W = words_per_row_;
    Words word(W, 0);
    std::vector<std::uint8_t> cw(n_, 0);
    for (std::size_t i = 0; i < info.size(); ++i)
        if (info[i]) {
            cw[info_cols_[i]] = 1;
            set_bit(word.data(), info_cols_[i]);
        }
    // Each reduced row holds one pivot; its other entries are information columns.
    for (std::size_t r = 0; r < pivot_cols_.size(); ++r) {
        const std::uint64_t* row = &reduced_[r * W];
        unsigned parity = 0;
        for (std::size_t w = 0; w < W; ++w)
            parity += static_cast<unsigned>(std::popcount(row[w] & word[w]));
        cw[pivot_cols_[r]] = static_cast<std::uint8_t>(parity & 1u);
    }
    return cw;
}

std::vector<std::uint8_t> LdpcCode::syndrome(std::span<const std::uint8_t> word) const
{
    if (word.size() != n_)
        throw std::invalid_argument("syndrome expects n bits");
    std::vector<std::uint8_t> s(rows_.size(), 0);
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        std::uint8_t acc = 0;
        for (std::uint32_t j : rows_[r])
            acc ^= word[j] & 1u;
        s[r] = acc;
    }
    return s;
}

bool LdpcCode::is_codeword(std::span<const std::uint8_t> word) const
{
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        std::uint8_t acc = 0;
        for (std::uint32_t j : rows_[r])
            acc ^= word[j] & 1u;
        if (acc)
            return false;
    }
    return true;
}

std::size_t gf2_rank(std::size_t n, const std::vector<std::vector<std::uint32_t>>& rows)
{
    // Forward elimination only, columns left to right.
    const std::size_t W = (n + 63) / 64;
    Words h(rows.size() * W, 0);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::uint32_t j : rows[r])
            h[r * W + (j >> 6)] ^= std::uint64_t{1} << (j & 63);
    std::size_t rank = 0;
    for (std::size_t c = 0; c < n && rank < rows.size(); ++c) {
        std::size_t p = rank;
        while (p < rows.size() && !get_bit(&h[p * W], c))
            ++p;
        if (p == rows.size())
            continue;
        std::swap_ranges(h.begin() + p * W, h.begin() + (p + 1) * W, h.begin() + rank * W);
        for (std::size_t r = rank + 1; r < rows.size(); ++r)
            if (get_bit(&h[r * W], c))
                for (std::size_t w = c >> 6; w < W; ++w)
                    h[r * W + w] ^= h[rank * W + w];
        ++rank;
    }
    return rank;
}

namespace {

// Overlap of row r with every other row, through the column lists.
std::size_t cycles_at(const std::vector<std::vector<std::uint32_t>>& rows,
                      const std::vector<std::vector<std::uint32_t>>& cols, std::size_t r,
                      std::vector<std::uint32_t>& counter)
{
    std::size_t cycles = 0;
    std::vector<std::uint32_t> touched;
    for (std::uint32_t j : rows[r])
        for (std::uint32_t r2 : cols[j])
            if (r2 != r) {
                if (counter[r2]++ == 0)
                    touched.push_back(r2);
            }
    for (std::uint32_t r2 : touched) {
        const std::size_t c = counter[r2];
        cycles += c * (c - 1) / 2;
        counter[r2] = 0;
    }
    return cycles;
}

void remove_from(std::vector<std::uint32_t>& v, std::uint32_t x)
{
    auto it = std::find(v.begin(), v.end(), x);
    if (it != v.end())
        v.erase(it);
}

} // namespace

LdpcCode gallager_regular(std::size_t n, int wc, int wr, std::uint64_t seed)
{
    if (wc < 2 || wr <= wc || n == 0 || (n * static_cast<std::size_t>(wc)) % static_cast<std::size_t>(wr))
        throw std::invalid_argument("infeasible degree pair for the requested length");
    const std::size_t m = n * static_cast<std::size_t>(wc) / static_cast<std::size_t>(wr);
    if (static_cast<std::size_t>(wr) > n)
        throw std::invalid_argument("row weight exceeds code length");

    rng::SplitMix gen(seed, rng::Stream::code);
    std::vector<std::uint32_t> sockets;
    sockets.reserve(n * wc);
    for (std::size_t j = 0; j < n; ++j)
        for (int t = 0; t < wc; ++t)
            sockets.push_back(static_cast<std::uint32_t>(j));
    gen.shuffle(sockets);

    std::vector<std::vector<std::uint32_t>> rows(m), cols(n);
    for (std::size_t r = 0; r < m; ++r)
        for (int t = 0; t < wr; ++t) {
            const std::uint32_t j = sockets[r * wr + t];
            rows[r].push_back(j);
            cols[j].push_back(static_cast<std::uint32_t>(r));
        }

    auto contains = [](const std::vector<std::uint32_t>& v, std::uint32_t x) {
        return std::find(v.begin(), v.end(), x) != v.end();
    };
    auto has_parallel = [](std::vector<std::uint32_t> v) {
        std::sort(v.begin(), v.end());
        return std::adjacent_find(v.begin(), v.end()) != v.end();
    };

    std::vector<std::uint32_t> counter(m, 0);
    // Edge swaps: move variable a of row r1 to row r2 and variable b of r2 to
    // r1. Accepted when it creates no parallel edge and does not increase the
    // local 4-cycle count.
    const std::size_t max_attempts = 200 * n;
    std::size_t attempts = 0;
    for (int pass = 0; pass < 100 && attempts < max_attempts; ++pass) {
        bool clean = true;
        for (std::size_t r1 = 0; r1 < m && attempts < max_attempts; ++r1) {
            const bool bad = has_parallel(rows[r1]) || cycles_at(rows, cols, r1, counter) > 0;
            if (!bad)
                continue;
            clean = false;
            for (int tries = 0; tries < 50 && attempts < max_attempts; ++tries, ++attempts) {
                const std::size_t p1 = gen.below(static_cast<std::uint64_t>(wr));
                const std::size_t r2 = gen.below(m);
                const std::size_t p2 = gen.below(static_cast<std::uint64_t>(wr));
                if (r2 == r1)
                    continue;
                const std::uint32_t a = rows[r1][p1], b = rows[r2][p2];
                if (a == b || contains(rows[r2], a) || contains(rows[r1], b))
                    continue;
                const std::size_t before = cycles_at(rows, cols, r1, counter) +
                                           cycles_at(rows, cols, r2, counter) +
                                           (has_parallel(rows[r1]) ? 1000 : 0);
                rows[r1][p1] = b;
                rows[r2][p2] = a;
                remove_from(cols[a], static_cast<std::uint32_t>(r1));
                cols[a].push_back(static_cast<std::uint32_t>(r2));
                remove_from(cols[b], static_cast<std::uint32_t>(r2));
                cols[b].push_back(static_cast<std::uint32_t>(r1));
                const std::size_t after = cycles_at(rows, cols, r1, counter) +
                                          cycles_at(rows, cols, r2, counter) +
                                          (has_parallel(rows[r1]) ? 1000 : 0);
                if (after < before)
                    break;
                if (after > before) {
                    rows[r1][p1] = a;
                    rows[r2][p2] = b;
                    remove_from(cols[a], static_cast<std::uint32_t>(r2));
                    cols[a].push_back(static_cast<std::uint32_t>(r1));
                    remove_from(cols[b], static_cast<std::uint32_t>(r1));
                    cols[b].push_back(static_cast<std::uint32_t>(r2));
                }
            }
        }
        if (clean)
            break;
    }
    for (const auto& row : rows)
        if (has_parallel(row))
            throw std::invalid_argument("could not remove parallel edges; length too short for the degrees");
    return LdpcCode(n, std::move(rows));
}

std::size_t count_four_cycles(const LdpcCode& code)
{
    std::vector<std::vector<std::uint32_t>> cols(code.n());
    for (std::size_t j = 0; j < code.n(); ++j)
        cols[j].assign(code.col(j).begin(), code.col(j).end());
    std::vector<std::uint32_t> counter(code.checks(), 0);
    std::size_t total = 0;
    for (std::size_t r = 0; r < code.checks(); ++r)
        total += cycles_at(code.rows(), cols, r, counter);
    return total / 2;
}

LdpcCode hamming_7_4()
{
    std::vector<std::vector<std::uint32_t>> rows(3);
    for (std::uint32_t j = 0; j < 7; ++j)
        for (int b = 0; b < 3; ++b)
            if (((j + 1) >> b) & 1u)
                rows[b].push_back(j);
    return LdpcCode(7, std::move(rows));
}

InterleaverMap make_interleaver(std::size_t n, std::size_t m, std::uint64_t seed)
{
    if (m == 0 || n == 0 || n % m)
        throw std::invalid_argument("interleaver length must be a positive multiple of m");
    rng::SplitMix gen(seed, rng::Stream::interleaver);
    return {rng::random_permutation(n, gen), m, seed};
}

InterleaverMap identity_interleaver(std::size_t n, std::size_t m)
{
    if (m == 0 || n == 0 || n % m)
        throw std::invalid_argument("interleaver length must be a positive multiple of m");
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    return {std::move(p), m, 0};
}

std::size_t padded_length(std::size_t n, std::size_t m) { return (n + m - 1) / m * m; }

BitMatrix interleave(std::span<const std::uint8_t> frame, const InterleaverMap& map)
{
    if (frame.size() != map.size())
        throw std::invalid_argument("frame length does not match the interleaver");
    BitMatrix out(map.ns(), map.m);
    // Row-major storage puts permuted position j at (j / m, j mod m).
    for (std::size_t j = 0; j < map.size(); ++j)
        out.data[j] = frame[map.perm[j]];
    return out;
}

std::vector<double> deinterleave(std::span<const double> llr_matrix, const InterleaverMap& map)
{
    if (llr_matrix.size() != map.size())
        throw std::invalid_argument("LLR matrix size does not match the interleaver");
    std::vector<double> out(map.size());
    for (std::size_t j = 0; j < map.size(); ++j)
        out[map.perm[j]] = llr_matrix[j];
    return out;
}

DecodeResult decode_sumproduct(const LdpcCode& code, std::span<const double> llrs, int max_iter)
{
    if (llrs.size() != code.n())
        throw std::invalid_argument("decoder expects n LLRs");
    constexpr double max_prod = 1.0 - 1e-15;

    const auto edge_var = code.edge_var();
    const auto row_start = code.row_start();
    const std::size_t E = edge_var.size();
    const std::size_t n = code.n();

    std::vector<double> channel(n), v2c(E), c2v(E, 0.0), fwd, bwd, tanh_half;
    for (std::size_t j = 0; j < n; ++j)
        channel[j] = -llrs[j];
    for (std::size_t e = 0; e < E; ++e)
        v2c[e] = channel[edge_var[e]];

    DecodeResult out;
    out.bits.assign(n, 0);
    for (int it = 1; it <= max_iter; ++it) {
        for (std::size_t r = 0; r + 1 < row_start.size(); ++r) {
            const std::size_t b = row_start[r], e_end = row_start[r + 1], deg = e_end - b;
            tanh_half.resize(deg);
            fwd.resize(deg + 1);
            bwd.resize(deg + 1);
            for (std::size_t t = 0; t < deg; ++t)
                tanh_half[t] = std::tanh(0.5 * v2c[b + t]);
            fwd[0] = 1.0;
            for (std::size_t t = 0; t < deg; ++t)
                fwd[t + 1] = fwd[t] * tanh_half[t];
            bwd[deg] = 1.0;
            for (std::size_t t = deg; t-- > 0;)
                bwd[t] = bwd[t + 1] * tanh_half[t];
            for (std::size_t t = 0; t < deg; ++t) {
                const double p = std::clamp(fwd[t] * bwd[t + 1], -max_prod, max_prod);
                c2v[b + t] = 2.0 * std::atanh(p);
            }
        }
        bool undecided = false;
        for (std::size_t j = 0; j < n; ++j) {
            const auto ve = code.var_edges(j);
            double total = channel[j];
            for (std::uint32_t e : ve)
                total += c2v[e];
            for (std::uint32_t e : ve)
                v2c[e] = total - c2v[e];
            out.bits[j] = total < 0.0 ? 1 : 0;
            undecided = undecided || total == 0.0;
        }
        out.iterations = it;
        if (!undecided && code.is_codeword(out.bits)) {
            out.converged = true;
            break;
        }
    }
    if (max_iter <= 0)
        for (std::size_t j = 0; j < n; ++j)
            out.bits[j] = channel[j] < 0.0 ? 1 : 0;
    return out;
}

FrameOutcome run_coded_frame(const LabeledConstellation& lc, const LdpcCode& code,
                             const InterleaverMap& map, const SnrPoint& snr, std::uint64_t seed,
                             std::uint64_t frame)
{
    if (map.m != static_cast<std::size_t>(lc.m()))
        throw std::invalid_argument("interleaver and constellation disagree on bits per symbol");
    if (map.size() != padded_length(code.n(), map.m))
        throw std::invalid_argument("interleaver length does not match the padded code length");

    const std::uint64_t frame_seed = rng::hash(seed, rng::Stream::frame, frame);
    std::vector<std::uint8_t> info(code.k());
    for (std::size_t i = 0; i < info.size(); ++i)
        info[i] = static_cast<std::uint8_t>(rng::hash(frame_seed, rng::Stream::info_bits, i) & 1u);
    std::vector<std::uint8_t> cw = code.encode(info);
    cw.resize(map.size(), 0);

    BitMatrix bits = interleave(cw, map);
    const SymbolBlock block = map_bits(lc, bits);
    const auto received = transmit(block, snr, frame_seed);
    const bool product = factorize(lc).has_value();
    LlrBlock llr = product
                       ? factorized_llrs(received, lc, snr, LlrConvention::one_over_zero, std::move(bits))
                       : exact_llrs(received, lc, snr, LlrConvention::one_over_zero, std::move(bits));

    FrameOutcome out;
    out.coded_bit_errors = prefec_ber(llr).bit_errors;
    std::vector<double> code_llrs = deinterleave(llr.llrs, map);
    code_llrs.resize(code.n());
    const DecodeResult dec = decode_sumproduct(code, code_llrs, 50);
    const auto info_pos = code.info_positions();
    for (std::size_t i = 0; i < info.size(); ++i)
        out.bit_errors += dec.bits[info_pos[i]] != info[i];
    out.iterations = dec.iterations;
    out.converged = dec.converged;
    return out;
}

PostFecResult run_coded_point(const LabeledConstellation& lc, const LdpcCode& code,
                              const InterleaverMap& map, const SnrPoint& snr, std::uint64_t seed,
                              const CodedPointOptions& opt)
{
    PostFecResult res;
    res.info_bits_per_frame = code.k();
    std::size_t iterations = 0, coded_errors = 0;
    const std::size_t batch = std::max<std::size_t>(1, opt.batch);
    while (res.frames < opt.max_frames && res.bit_errors < opt.target_errors) {
        const std::size_t count = std::min(batch, opt.max_frames - res.frames);
        std::vector<FrameOutcome> outcomes(count);
        parallel_for(count, opt.workers, [&](std::size_t i) {
            outcomes[i] = run_coded_frame(lc, code, map, snr, seed, res.frames + i);
        });
        for (const auto& o : outcomes) {
            res.bit_errors += o.bit_errors;
            res.frame_errors += o.bit_errors > 0;
            iterations += static_cast<std::size_t>(o.iterations);
            coded_errors += o.coded_bit_errors;
        }
        res.frames += count;
    }
    res.hit_target = res.bit_errors >= opt.target_errors;
    if (res.frames) {
        res.ber_pos = static_cast<double>(res.bit_errors) /
                      (static_cast<double>(res.frames) * static_cast<double>(code.k()));
        res.avg_iterations = static_cast<double>(iterations) / static_cast<double>(res.frames);
        res.ber_coded_hd = static_cast<double>(coded_errors) /
                           (static_cast<double>(res.frames) * static_cast<double>(map.size()));
    }
    return res;
}

} // namespace cm4d
