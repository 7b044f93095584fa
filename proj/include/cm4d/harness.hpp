#pragma once

// Catalog of named systems, sweeps and threshold analysis behind the CLI.

#include "cm4d/channel.hpp"
#include "cm4d/geometry.hpp"
#include "cm4d/ldpc.hpp"
#include "cm4d/rates.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cm4d::harness {

/// Name not found in the catalog.
class UnknownSystem : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Missing or invalid data file behind a catalog slot.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// CM4D_DATA_DIR from the environment, else the bundled data directory.
std::filesystem::path default_data_dir();

struct CatalogEntry {
    std::string id;
    std::string description;
    bool file_slot = false;
};

const std::vector<CatalogEntry>& catalog();
std::string catalog_listing();

/// Constellation by catalog name (pm-qpsk, pm-16qam, c4-256, c4-16, ...) or CSV path.
/// Not normalized.
Constellation resolve_constellation(const std::string& name,
                                    const std::filesystem::path& data_dir = default_data_dir());

/// A system id such as "pm-16qam-brgc", or a constellation name/path plus an
/// explicit labeling (brgc, nbc, agc, default, or a labeling file path).
/// The result is normalized to unit energy.
LabeledConstellation resolve_system(const std::string& id, const std::string& labeling = {},
                                    const std::filesystem::path& data_dir = default_data_dir());

/// Validation gates for file-ingested constellations.
void validate_c4_16(const Constellation& c);
void validate_c4_4096(const Constellation& c);

/// Every SNR is within [lo, hi] on a uniform grid with the given step.
std::vector<double> snr_grid(double from_db, double to_db, double step_db);
/// Throws std::invalid_argument unless the grid is strictly increasing.
void check_grid(const std::vector<double>& grid);

// --- CSV ---------------------------------------------------------------------

std::string format_number(double v);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const;
    double number(std::size_t row, const std::string& name) const;
    const std::string& text(std::size_t row, const std::string& name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv(const std::filesystem::path& path);
void write_csv(std::ostream& out, const CsvTable& table);

// --- rate sweeps -------------------------------------------------------------

enum class RateSweepMethod { monte_carlo, gauss_hermite };

struct RateSweepOptions {
    std::vector<double> snr_db;
    RateSweepMethod method = RateSweepMethod::monte_carlo;
    std::size_t samples = 100000;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    int nodes = 20;
    /// Reuse the same symbol and noise streams at every SNR point. When off,
    /// point i uses a seed derived from (seed, i).
    bool common_random_numbers = true;
};

struct RateRow {
    std::string system;
    double snr_db = 0.0;
    double ebn0_db = 0.0;
    double capacity = 0.0;
    RateEstimate mi;
    RateEstimate gmi;
    double diff_std_error = 0.0;
};

std::vector<RateRow> rate_sweep(const LabeledConstellation& lc, const std::string& system_id,
                                const RateSweepOptions& opt);

extern const std::vector<std::string> rate_csv_columns;
CsvTable rate_table(const std::vector<RateRow>& rows, std::uint64_t seed);

/// gnuplot script plotting MI and GMI against SNR from the named CSV files.
std::string rate_plot_script(const std::vector<std::string>& csv_files);

// --- coded sweeps ------------------------------------------------------------

struct GallagerDegrees {
    int wc;
    int wr;
};

/// Degree pair used for a nominal rate ("1/2", "3/4", ...).
GallagerDegrees degrees_for_rate(const std::string& rate);
/// Gallager code with the degree pair of `rate` and length near n.
LdpcCode gallager_for_rate(const std::string& rate, std::size_t n, std::uint64_t seed);
double parse_rate(const std::string& rate);

struct CodedSweepOptions {
    std::vector<double> snr_db;
    std::size_t target_errors = 100;
    std::size_t max_frames = 1000;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    std::size_t metric_samples = 100000;
    /// Stop the sweep after the first point whose BER is below this (0 = never).
    double stop_below = 0.0;
    /// When positive, bisect the SNR gap around this BER until both sides
    /// have nonzero BER or the gap is below min_step_db.
    double refine_target = 0.0;
    double min_step_db = 0.02;
};

struct CodedRow {
    std::string system;
    std::string rate_nominal;
    std::string code;
    std::size_t n = 0;
    std::size_t k = 0;
    int m = 0;
    double snr_db = 0.0;
    double ebn0_db = 0.0;
    double ber_pre = 0.0;        // hard decisions on max-log LLRs
    double ber_pre_exact = 0.0;  // hard decisions on exact LLRs
    double mi = 0.0, mi_se = 0.0;
    double gmi = 0.0, gmi_se = 0.0;
    PostFecResult post;
};

std::vector<CodedRow> coded_sweep(const LabeledConstellation& lc, const std::string& system_id,
                                  const LdpcCode& code, const std::string& code_label,
                                  const std::string& rate_nominal, const CodedSweepOptions& opt);

extern const std::vector<std::string> coded_csv_columns;
CsvTable coded_table(const std::vector<CodedRow>& rows, std::uint64_t seed);
std::vector<CodedRow> coded_rows_from_table(const CsvTable& t);

// --- metric collapse -----------------------------------------------------------

enum class Metric { snr, berpre, mi, gmi };
const char* to_string(Metric m);
Metric parse_metric(const std::string& s);
/// Column value of a metric in a coded row (normalized by m for MI and GMI).
double metric_value(const CodedRow& row, Metric m);

/// Metric value where ber_pos crosses target, linear in the metric against
/// log10(ber_pos) between the first bracketing pair of points with nonzero BER.
/// Rows must belong to one (rate, system) and be sorted by SNR.
std::optional<double> threshold(const std::vector<CodedRow>& rows, Metric metric, double target);

struct ThresholdEntry {
    std::string rate;
    std::string system;
    Metric metric = Metric::gmi;
    std::optional<double> value;
};

struct SpreadEntry {
    std::string rate;
    Metric metric = Metric::gmi;
    double spread = 0.0;
    std::size_t systems = 0;
};

struct CollapseResult {
    std::vector<ThresholdEntry> thresholds;
    std::vector<SpreadEntry> spreads;
    /// Dimensionless metrics (berpre, mi, gmi) ordered by total spread.
    std::vector<std::pair<Metric, double>> ranking;

    double spread(const std::string& rate, Metric m) const;
    double total_spread(Metric m) const;
};

CollapseResult collapse(const std::vector<CodedRow>& rows, double target,
                        const std::vector<Metric>& metrics);
CsvTable collapse_table(const CollapseResult& r);

/// SNR (dB) at which the Monte Carlo GMI reaches eta, by bisection with
/// common random numbers.
double snr_for_gmi(const LabeledConstellation& lc, double eta, std::size_t samples,
                   std::uint64_t seed, std::size_t workers, double lo_db = -10.0,
                   double hi_db = 40.0);

} // namespace cm4d::harness
