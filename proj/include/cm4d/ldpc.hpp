#pragma once

// Binary LDPC codes: construction, encoding, interleaving onto bit positions,
// sum-product decoding and post-FEC BER measurement.

#include "cm4d/channel.hpp"
#include "cm4d/demapper.hpp"
#include "cm4d/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace cm4d {

class LdpcCode {
public:
    /// rows[r] lists the variable indices of check r. Throws
    /// std::invalid_argument on out-of-range or repeated indices, or when the
    /// resulting code has no information bits.
    LdpcCode(std::size_t n, std::vector<std::vector<std::uint32_t>> rows);

    std::size_t n() const noexcept { return n_; }
    std::size_t checks() const noexcept { return rows_.size(); }
    std::size_t rank() const noexcept { return pivot_cols_.size(); }
    std::size_t k() const noexcept { return n_ - rank(); }
    double rate() const noexcept { return static_cast<double>(k()) / static_cast<double>(n_); }
    std::size_t edges() const noexcept { return edge_var_.size(); }

    std::span<const std::uint32_t> row(std::size_t r) const;
    std::span<const std::uint32_t> col(std::size_t j) const { return cols_[j]; }
    const std::vector<std::vector<std::uint32_t>>& rows() const noexcept { return rows_; }

    /// Codeword positions carrying information bits, ascending.
    std::span<const std::uint32_t> info_positions() const noexcept { return info_cols_; }

    /// Systematic encoding: info bits land on info_positions(), the remaining
    /// positions are solved from the reduced parity-check matrix.
    std::vector<std::uint8_t> encode(std::span<const std::uint8_t> info) const;

    std::vector<std::uint8_t> syndrome(std::span<const std::uint8_t> word) const;
    bool is_codeword(std::span<const std::uint8_t> word) const;

    // Flattened check-major edge layout shared with the decoder.
    std::span<const std::uint32_t> edge_var() const noexcept { return edge_var_; }
    std::span<const std::uint32_t> row_start() const noexcept { return row_start_; }
    std::span<const std::uint32_t> var_edges(std::size_t j) const { return var_edges_[j]; }

private:
    std::size_t n_;
    std::vector<std::vector<std::uint32_t>> rows_;
    std::vector<std::vector<std::uint32_t>> cols_;
    std::vector<std::uint32_t> edge_var_;
    std::vector<std::uint32_t> row_start_;
    std::vector<std::vector<std::uint32_t>> var_edges_;

    // Encoder: reduced rows (dense words) and their pivot columns.
    std::size_t words_per_row_ = 0;
    std::vector<std::uint64_t> reduced_;
    std::vector<std::uint32_t> pivot_cols_;
    std::vector<std::uint32_t> info_cols_;
};

/// GF(2) rank by dense elimination, independent of the encoder.
std::size_t gf2_rank(std::size_t n, const std::vector<std::vector<std::uint32_t>>& rows);

/// Regular code with column weight wc and row weight wr. Parallel edges are
/// removed and 4-cycles reduced by random edge swaps. Deterministic in seed.
/// Throws std::invalid_argument when n*wc is not divisible by wr or wc < 2.
LdpcCode gallager_regular(std::size_t n, int wc, int wr, std::uint64_t seed);

/// Number of 4-cycles (pairs of checks sharing two variables).
std::size_t count_four_cycles(const LdpcCode& code);

/// MacKay alist text format. Throws ParseError with the line number.
LdpcCode from_alist(const std::filesystem::path& path);
void to_alist(const LdpcCode& code, const std::filesystem::path& path);

/// (7,4) Hamming code, columns are the binary expansions of 1..7.
LdpcCode hamming_7_4();

// --- interleaving -----------------------------------------------------------

/// Position j of the permuted frame carries codeword bit perm[j] and goes to
/// bit stream j mod m of symbol floor(j / m).
struct InterleaverMap {
    std::vector<std::size_t> perm;
    std::size_t m = 1;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return perm.size(); }
    std::size_t ns() const noexcept { return perm.size() / m; }
};

/// Throws std::invalid_argument unless n is a positive multiple of m.
InterleaverMap make_interleaver(std::size_t n, std::size_t m, std::uint64_t seed);
InterleaverMap identity_interleaver(std::size_t n, std::size_t m);

/// Frame length a code of length n occupies with m bits per symbol; the tail
/// beyond n carries known zero bits.
std::size_t padded_length(std::size_t n, std::size_t m);

BitMatrix interleave(std::span<const std::uint8_t> frame, const InterleaverMap& map);
std::vector<double> deinterleave(std::span<const double> llr_matrix, const InterleaverMap& map);

// --- decoding ---------------------------------------------------------------

struct DecodeResult {
    std::vector<std::uint8_t> bits;
    int iterations = 0;
    bool converged = false;
};

/// Flooding sum-product with tanh-rule check updates. `llrs` follow
/// ONE_OVER_ZERO (positive favours 1); they are negated internally to the
/// usual log P(0)/P(1) messages. Stops as soon as the hard decisions satisfy
/// every check; otherwise returns after max_iter iterations. A posterior of
/// exactly zero counts as undecided and blocks the stop.
DecodeResult decode_sumproduct(const LdpcCode& code, std::span<const double> llrs,
                               int max_iter = 50);

// --- coded chain ------------------------------------------------------------

struct FrameOutcome {
    std::size_t bit_errors = 0;      // information bits
    std::size_t coded_bit_errors = 0; // hard decisions on channel LLRs
    int iterations = 0;
    bool converged = false;
};

/// Information bits, encoding, interleaving, labeling, AWGN, exact LLRs,
/// deinterleaving and decoding for frame number `frame`.
FrameOutcome run_coded_frame(const LabeledConstellation& lc, const LdpcCode& code,
                             const InterleaverMap& map, const SnrPoint& snr,
                             std::uint64_t seed, std::uint64_t frame);

struct PostFecResult {
    double ber_pos = 0.0;
    std::size_t frames = 0;
    std::size_t bit_errors = 0;
    std::size_t frame_errors = 0;
    std::size_t info_bits_per_frame = 0;
    double avg_iterations = 0.0;
    double ber_coded_hd = 0.0;
    bool hit_target = false; // stopped on the error target rather than the frame cap
};

struct CodedPointOptions {
    std::size_t target_errors = 100;
    std::size_t max_frames = 1000;
    std::size_t batch = 16;  // frames per stopping-rule check, fixed for determinism
    std::size_t workers = 1;
};

/// Runs frames until target_errors information-bit errors or max_frames.
/// The stopping rule is checked per batch, so counts are worker invariant.
PostFecResult run_coded_point(const LabeledConstellation& lc, const LdpcCode& code,
                              const InterleaverMap& map, const SnrPoint& snr, std::uint64_t seed,
                              const CodedPointOptions& opt);

} // namespace cm4d
