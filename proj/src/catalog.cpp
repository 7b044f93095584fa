#include "cm4d/harness.hpp"

#include <bit>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace cm4d::harness {

std::filesystem::path default_data_dir()
{
    if (const char* env = std::getenv("CM4D_DATA_DIR"); env && *env)
        return env;
    return CM4D_DATA_DIR;
}

const std::vector<CatalogEntry>& catalog()
{
    static const std::vector<CatalogEntry> entries{
        {"pm-qpsk", "4D product of 2-PAM, 16 points", false},
        {"pm-16qam-brgc", "4D product of 4-PAM, Gray labeling", false},
        {"pm-16qam-nbc", "4D product of 4-PAM, natural binary labeling", false},
        {"pm-16qam-agc", "4D product of 4-PAM, anti-Gray labeling", false},
        {"pm-64qam-brgc", "4D product of 8-PAM, Gray labeling", false},
        {"pm-64qam-nbc", "4D product of 8-PAM, natural binary labeling", false},
        {"pm-256qam-brgc", "4D product of 16-PAM, Gray labeling", false},
        {"pm-256qam-nbc", "4D product of 16-PAM, natural binary labeling", false},
        {"ps-qpsk", "8 points of the odd D4 coset, sign plus Gray axis labeling", false},
        {"so-pm-qpsk", "16 points, odd-parity orthants shrunk, sign labeling", false},
        {"c4-256", "256 points, odd D4 coset shells up to norm 9, natural labeling", false},
        {"d4-subset-4096", "4096 lowest-energy points of the odd D4 coset, natural labeling", false},
        {"c4-16", "16-point packing from data/c4_16.csv, labeling from data/c4_16_bsa.lbl", true},
        {"c4-4096", "4096 points from data/c4_4096.csv (not bundled)", true},
    };
    return entries;
}

std::string catalog_listing()
{
    std::ostringstream os;
    os << "available systems:\n";
    for (const auto& e : catalog())
        os << "  " << e.id << (e.file_slot ? " [file]" : "") << "  " << e.description << '\n';
    os << "constellation names also accept a labeling suffix (-brgc, -nbc, -agc) or --labeling";
    return os.str();
}

namespace {

int pam_levels(const std::string& name)
{
    if (name == "pm-qpsk")
        return 2;
    if (name == "pm-16qam")
        return 4;
    if (name == "pm-64qam")
        return 8;
    if (name == "pm-256qam")
        return 16;
    return 0;
}

Constellation pm_qam(int levels, const std::string& name)
{
    const auto pam = pam_points(levels);
    return product_constellation({pam, pam, pam, pam}, name);
}

std::filesystem::path slot_file(const std::string& name, const std::filesystem::path& dir)
{
    if (name == "c4-16")
        return dir / "c4_16.csv";
    return dir / "c4_4096.csv";
}

LoadedConstellation load_slot(const std::string& name, const std::filesystem::path& dir)
{
    const auto path = slot_file(name, dir);
    if (!std::filesystem::exists(path))
        throw DataError(name + ": data file " + path.string() + " not found");
    LoadedConstellation loaded = [&] {
        try {
            return load_constellation(path, name);
        } catch (const ParseError& e) {
            throw DataError(path.string() + ": " + e.what());
        }
    }();
    if (name == "c4-16")
        validate_c4_16(loaded.constellation);
    else
        validate_c4_4096(loaded.constellation);
    return loaded;
}

bool is_builtin(const std::string& name)
{
    return pam_levels(name) || name == "ps-qpsk" || name == "so-pm-qpsk" || name == "c4-256" ||
           name == "d4-subset-4096";
}

bool is_slot(const std::string& name) { return name == "c4-16" || name == "c4-4096"; }

Labeling pam_product_labeling(int levels, const std::string& kind)
{
    const int bits = std::countr_zero(static_cast<unsigned>(levels));
    Labeling per_dim = [&] {
        if (kind == "brgc")
            return brgc(bits);
        if (kind == "nbc")
            return nbc(bits);
        if (kind == "agc") {
            if (levels != 4)
                throw UnknownSystem("anti-Gray labeling is only defined for 4-PAM");
            return agc2();
        }
        throw UnknownSystem("unknown labeling '" + kind + "'");
    }();
    return product_labeling({per_dim, per_dim, per_dim, per_dim});
}

Labeling index_labeling(const Constellation& c, const std::string& kind)
{
    const auto M = c.size();
    if (!std::has_single_bit(M))
        throw DataError(c.name() + ": size " + std::to_string(M) + " is not a power of two");
    const int m = std::countr_zero(M);
    if (kind == "nbc")
        return nbc(m);
    if (kind == "brgc")
        return brgc(m);
    throw UnknownSystem("labeling '" + kind + "' is not defined for " + c.name());
}

} // namespace

Constellation resolve_constellation(const std::string& name, const std::filesystem::path& data_dir)
{
    if (const int L = pam_levels(name))
        return pm_qam(L, name);
    if (name == "ps-qpsk")
        return ps_qpsk();
    if (name == "so-pm-qpsk")
        return so_pm_qpsk();
    if (name == "c4-256")
        return d4_odd_shells(9).renamed("c4-256");
    if (name == "d4-subset-4096")
        return d4_subset(4096).renamed("d4-subset-4096");
    if (is_slot(name))
        return load_slot(name, data_dir).constellation;
    if (std::filesystem::is_regular_file(name)) {
        try {
            return load_constellation(name).constellation;
        } catch (const ParseError& e) {
            throw DataError(name + ": " + e.what());
        }
    }
    throw UnknownSystem("unknown system '" + name + "'");
}

LabeledConstellation resolve_system(const std::string& id, const std::string& labeling,
                                    const std::filesystem::path& data_dir)
{
    std::string name = id;
    std::string kind = labeling;
    if (!is_builtin(name) && !is_slot(name) && !std::filesystem::is_regular_file(name)) {
        const auto dash = name.rfind('-');
        if (dash != std::string::npos) {
            const std::string suffix = name.substr(dash + 1);
            const std::string base = name.substr(0, dash);
            if ((suffix == "brgc" || suffix == "nbc" || suffix == "agc" || suffix == "bsa") &&
                (is_builtin(base) || is_slot(base))) {
                if (!kind.empty() && kind != suffix)
                    throw UnknownSystem("system '" + id + "' conflicts with labeling '" + kind + "'");
                name = base;
                kind = suffix;
            }
        }
    }

    // Labeling given as a file overrides everything else.
    std::optional<Labeling> from_file;
    if (!kind.empty() && kind != "brgc" && kind != "nbc" && kind != "agc" && kind != "bsa" &&
        kind != "default") {
        if (!std::filesystem::is_regular_file(kind))
            throw UnknownSystem("unknown labeling '" + kind + "'");
        try {
            from_file = load_labeling(kind);
        } catch (const ParseError& e) {
            throw DataError(kind + ": " + e.what());
        }
    }
    if (kind == "default")
        kind.clear();

    std::optional<LoadedConstellation> loaded;
    Constellation c = [&] {
        if (is_slot(name)) {
            loaded = load_slot(name, data_dir);
            return loaded->constellation;
        }
        if (!is_builtin(name) && std::filesystem::is_regular_file(name)) {
            try {
                loaded = load_constellation(name);
            } catch (const ParseError& e) {
                throw DataError(name + ": " + e.what());
            }
            return loaded->constellation;
        }
        return resolve_constellation(name, data_dir);
    }();

    Labeling l = [&]() -> Labeling {
        if (from_file)
            return *from_file;
        if (const int L = pam_levels(name))
            return pam_product_labeling(L, kind.empty() ? "brgc" : kind);
        if (name == "ps-qpsk" && kind.empty())
            return ps_qpsk_labeling(c);
        if (name == "so-pm-qpsk" && kind.empty())
            return orthant_labeling(c);
        if (name == "c4-16" && (kind.empty() || kind == "bsa")) {
            const auto lbl = data_dir / "c4_16_bsa.lbl";
            if (std::filesystem::exists(lbl)) {
                try {
                    return load_labeling(lbl);
                } catch (const ParseError& e) {
                    throw DataError(lbl.string() + ": " + e.what());
                }
            }
            if (kind == "bsa")
                throw DataError("c4-16: labeling file " + lbl.string() + " not found");
        }
        if (kind == "bsa")
            throw UnknownSystem("no stored BSA labeling for " + name);
        if (kind.empty() && loaded && loaded->labeling)
            return *loaded->labeling;
        return index_labeling(c, kind.empty() ? "nbc" : kind);
    }();

    if (l.size() != c.size())
        throw DataError("labeling has " + std::to_string(l.size()) + " words but " + name +
                        " has " + std::to_string(c.size()) + " points");
    return LabeledConstellation(normalize_energy(c), std::move(l));
}

void validate_c4_16(const Constellation& c)
{
    if (c.size() != 16)
        throw DataError("c4-16 must have 16 points, got " + std::to_string(c.size()));
    const auto pm = pm_qam(2, "pm-qpsk");
    const double gain = asymptotic_gain_db(c, pm, 4, 4);
    if (std::abs(gain - 1.11) > 0.01) {
        std::ostringstream os;
        os << "c4-16 asymptotic gain over pm-qpsk is " << gain << " dB, expected 1.11 +- 0.01";
        throw DataError(os.str());
    }
}

void validate_c4_4096(const Constellation& c)
{
    if (c.size() != 4096)
        throw DataError("c4-4096 must have 4096 points, got " + std::to_string(c.size()));
    // All differences must lie in D4 once the minimum distance is scaled to sqrt(2).
    const double scale = std::sqrt(2.0 / min_sq_distance(c));
    const auto& p0 = c[0];
    for (std::size_t i = 1; i < c.size(); ++i) {
        long sum = 0;
        for (int d = 0; d < 4; ++d) {
            const double v = (c[i][d] - p0[d]) * scale;
            const double r = std::round(v);
            if (std::abs(v - r) > 1e-6)
                throw DataError("c4-4096 point " + std::to_string(i) + " is off the D4 lattice");
            sum += static_cast<long>(r);
        }
        if (sum % 2 != 0)
            throw DataError("c4-4096 point " + std::to_string(i) + " is off the D4 coset");
    }
}

std::vector<double> snr_grid(double from_db, double to_db, double step_db)
{
    if (!(step_db > 0.0) || !(to_db >= from_db))
        throw std::invalid_argument("SNR grid needs step > 0 and to >= from");
    std::vector<double> grid;
    const auto count = static_cast<std::size_t>(std::floor((to_db - from_db) / step_db + 1e-9));
    for (std::size_t i = 0; i <= count; ++i)
        grid.push_back(from_db + static_cast<double>(i) * step_db);
    return grid;
}

void check_grid(const std::vector<double>& grid)
{
    if (grid.empty())
        throw std::invalid_argument("empty SNR grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!std::isfinite(grid[i]))
            throw std::invalid_argument("non-finite SNR in grid");
        if (i && !(grid[i] > grid[i - 1]))
            throw std::invalid_argument("SNR grid must be strictly increasing");
    }
}

} // namespace cm4d::harness
