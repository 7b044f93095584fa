#pragma once

// 4D constellations, binary labelings and their construction.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cm4d {

using Point4 = std::array<double, 4>;

inline double squared_norm(const Point4& p) noexcept
{
    return p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + p[3] * p[3];
}

inline double squared_distance(const Point4& a, const Point4& b) noexcept
{
    const double d0 = a[0] - b[0], d1 = a[1] - b[1], d2 = a[2] - b[2], d3 = a[3] - b[3];
    return d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3;
}

/// Malformed input file. Carries the 1-based line number of the offending row
/// (0 when the problem is not tied to one line).
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
          line_(line)
    {
    }
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// An ordered set of M >= 2 distinct, finite points with uniform prior.
class Constellation {
public:
    /// Throws std::invalid_argument on fewer than two points, non-finite
    /// coordinates or duplicate points.
    Constellation(std::string name, std::vector<Point4> points);

    const std::string& name() const noexcept { return name_; }
    std::span<const Point4> points() const noexcept { return points_; }
    const Point4& operator[](std::size_t i) const { return points_[i]; }
    std::size_t size() const noexcept { return points_.size(); }

    /// Mean squared norm (1/M) sum |s_i|^2.
    double es() const noexcept { return es_; }

    Constellation renamed(std::string name) const;

private:
    std::string name_;
    std::vector<Point4> points_;
    double es_ = 0.0;
};

/// Bijection between point indices and m-bit words. Bit position k = 0 is the
/// most significant bit of the word.
class Labeling {
public:
    /// words[i] labels point i. Throws std::invalid_argument unless words is a
    /// permutation of {0, ..., 2^m - 1} with m >= 1.
    explicit Labeling(std::vector<std::uint32_t> words);

    int m() const noexcept { return m_; }
    std::size_t size() const noexcept { return words_.size(); }
    std::uint32_t word(std::size_t i) const { return words_[i]; }
    std::span<const std::uint32_t> words() const noexcept { return words_; }
    int bit(std::size_t i, int k) const { return (words_[i] >> (m_ - 1 - k)) & 1u; }
    /// Point index carrying `word`.
    std::size_t index_of(std::uint32_t word) const { return inverse_[word]; }

    bool operator==(const Labeling& other) const { return words_ == other.words_; }

private:
    int m_ = 0;
    std::vector<std::uint32_t> words_;
    std::vector<std::size_t> inverse_;
};

/// A constellation together with a labeling of matching size and the induced
/// index sets S_{k,b}.
class LabeledConstellation {
public:
    LabeledConstellation(Constellation constellation, Labeling labeling);

    const Constellation& constellation() const noexcept { return constellation_; }
    const Labeling& labeling() const noexcept { return labeling_; }
    int m() const noexcept { return labeling_.m(); }
    std::size_t size() const noexcept { return constellation_.size(); }
    const std::string& name() const noexcept { return constellation_.name(); }

    /// Indices of points whose bit k equals b, ascending.
    std::span<const std::size_t> subset(int k, int b) const { return subsets_[2 * k + b]; }

private:
    Constellation constellation_;
    Labeling labeling_;
    std::vector<std::vector<std::size_t>> subsets_;
};

// --- Cartesian-product structure -------------------------------------------

/// Detected product structure: every point is a combination of per-dimension
/// levels and every combination occurs exactly once.
struct ProductStructure {
    std::array<std::vector<double>, 4> levels;               // ascending per dimension
    std::vector<std::array<std::uint16_t, 4>> level_index;   // per point
};

std::optional<ProductStructure> product_structure(const Constellation& c);

/// A bit that depends on a single coordinate: bit value as a function of the
/// level index in that dimension.
struct BitFactor {
    int dim = 0;
    std::vector<std::uint8_t> bit_of_level;
};

struct Factorization {
    ProductStructure product;
    std::vector<BitFactor> bits; // one per bit position
};

/// Product structure plus, for every bit position, the single dimension it
/// depends on. Empty when either is missing.
std::optional<Factorization> factorize(const LabeledConstellation& lc);

// --- constructions ----------------------------------------------------------

/// {-(L-1), ..., L-1} with spacing 2. Throws std::invalid_argument unless
/// levels is a power of two >= 2.
std::vector<double> pam_points(int levels);

/// Cartesian product, lexicographic with dimension 1 the most significant digit.
Constellation product_constellation(const std::array<std::vector<double>, 4>& per_dim,
                                    std::string name);

/// Integer points with odd coordinate sum and squared norm <= max_norm_sq,
/// sorted by squared norm then lexicographically.
Constellation d4_odd_shells(int max_norm_sq);

/// The M lowest-norm points of the odd-sum D4 coset, canonical tie-break.
Constellation d4_subset(std::size_t M);

/// PS-QPSK: d4_odd_shells(1).
Constellation ps_qpsk();

/// Even-parity sign patterns of (+-1)^4 plus the odd-parity patterns scaled by
/// (sqrt(5) - 1) / 2. Canonical order.
Constellation so_pm_qpsk();

/// Scales to es = 1. Throws std::invalid_argument when es == 0.
Constellation normalize_energy(const Constellation& c);

double min_sq_distance(const Constellation& c);

/// 10 log10((dmin_c^2 / Eb_c) / (dmin_ref^2 / Eb_ref)) with Eb = es / bits.
double asymptotic_gain_db(const Constellation& c, const Constellation& reference, int bits_c,
                          int bits_ref);

/// Repulsion search for a power-efficient packing of M points with unit
/// energy. Deterministic in seed.
Constellation optimize_packing(std::size_t M, std::uint64_t seed, int iterations);

// --- labelings --------------------------------------------------------------

Labeling brgc(int m);
Labeling nbc(int m);
/// Anti-Gray code for 4 points: [00, 11, 01, 10].
Labeling agc2();
/// Concatenates per-dimension words (dimension 1 most significant) in the
/// point order of product_constellation.
Labeling product_labeling(const std::vector<Labeling>& per_dim);
/// Bit k is 1 iff coordinate k is positive. Requires 16 points with distinct
/// sign patterns.
Labeling orthant_labeling(const Constellation& c);
/// 3-bit labeling of PS-QPSK: sign bit followed by the Gray-coded axis index.
Labeling ps_qpsk_labeling(const Constellation& c);

/// Sum over adjacent pairs of the Hamming distance between their words.
int adjacent_hamming_sum(const Labeling& l);

// --- files ------------------------------------------------------------------

struct LoadedConstellation {
    Constellation constellation;
    std::optional<Labeling> labeling;
};

/// Constellation CSV: `x1,x2,x3,x4[,label]` per row, `#` comments, optional
/// header. Labels are base 10 unless written with a `0b` prefix or, for m >= 2,
/// as exactly m binary digits. Throws ParseError.
LoadedConstellation load_constellation(const std::filesystem::path& path,
                                       std::string name = {});
void save_constellation(const Constellation& c, const std::filesystem::path& path,
                        const Labeling* labeling = nullptr);

/// One word per row in point-index order, `#` comments.
Labeling load_labeling(const std::filesystem::path& path);
void save_labeling(const Labeling& l, const std::filesystem::path& path,
                   const std::vector<std::string>& header_comments = {});

/// Text form used in files: exactly m binary digits.
std::string format_word(std::uint32_t word, int m);

} // namespace cm4d
