#include "cm4d/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cm4d::harness {

std::string format_number(double v)
{
    if (std::isnan(v))
        throw std::invalid_argument("refusing to write NaN to CSV");
    if (v == 0.0)
        return "0";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::size_t CsvTable::column(const std::string& name) const
{
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name)
            return i;
    throw ParseError("missing column '" + name + "'", 1);
}

const std::string& CsvTable::text(std::size_t row, const std::string& name) const
{
    return rows.at(row).at(column(name));
}

double CsvTable::number(std::size_t row, const std::string& name) const
{
    const auto& s = text(row, name);
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("column '" + name + "': not a number '" + s + "'", row + 2);
    }
}

namespace {

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ','))
        out.push_back(field);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

} // namespace

CsvTable read_csv(std::istream& in)
{
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        auto fields = split(line);
        if (t.header.empty()) {
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size())
            throw ParseError("expected " + std::to_string(t.header.size()) + " fields, got " +
                                 std::to_string(fields.size()),
                             lineno);
        t.rows.push_back(std::move(fields));
    }
    if (t.header.empty())
        throw ParseError("no header row", 0);
    return t;
}

CsvTable read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open " + path.string(), 0);
    return read_csv(in);
}

void write_csv(std::ostream& out, const CsvTable& table)
{
    auto line = [&](const std::vector<std::string>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (v[i].find_first_of(",\n") != std::string::npos)
                throw std::invalid_argument("CSV field contains a separator: " + v[i]);
            out << (i ? "," : "") << v[i];
        }
        out << '\n';
    };
    line(table.header);
    for (const auto& r : table.rows) {
        if (r.size() != table.header.size())
            throw std::logic_error("CSV row width does not match the header");
        line(r);
    }
}

const std::vector<std::string> rate_csv_columns{
    "system", "method",  "samples", "seed",  "snr_db",  "ebn0_db", "capacity",
    "mi",     "mi_se",   "gmi",     "gmi_se", "diff_se", "m"};

CsvTable rate_table(const std::vector<RateRow>& rows, std::uint64_t seed)
{
    CsvTable t;
    t.header = rate_csv_columns;
    const std::size_t m = rows.empty() ? 0 : rows.front().gmi.per_bit.size();
    for (std::size_t k = 0; k < m; ++k)
        t.header.push_back("gmi_b" + std::to_string(k + 1));
    for (const auto& r : rows) {
        std::vector<std::string> v{r.system,
                                   to_string(r.mi.method),
                                   std::to_string(r.mi.samples_or_nodes),
                                   std::to_string(seed),
                                   format_number(r.snr_db),
                                   format_number(r.ebn0_db),
                                   format_number(r.capacity),
                                   format_number(r.mi.value),
                                   format_number(r.mi.std_error),
                                   format_number(r.gmi.value),
                                   format_number(r.gmi.std_error),
                                   format_number(r.diff_std_error),
                                   std::to_string(m)};
        for (std::size_t k = 0; k < m; ++k)
            v.push_back(format_number(k < r.gmi.per_bit.size() ? r.gmi.per_bit[k] : 0.0));
        t.rows.push_back(std::move(v));
    }
    return t;
}

std::string rate_plot_script(const std::vector<std::string>& csv_files)
{
    std::ostringstream os;
    os << "set datafile separator ','\n"
          "set key autotitle columnhead\n"
          "set xlabel 'SNR [dB]'\n"
          "set ylabel 'bits/symbol'\n"
          "set grid\n"
          "plot \\\n";
    for (std::size_t i = 0; i < csv_files.size(); ++i) {
        const auto& f = csv_files[i];
        os << "  '" << f << "' using 5:8 with lines title '" << f << " MI', \\\n"
           << "  '" << f << "' using 5:10 with lines dashtype 2 title '" << f << " GMI'"
           << (i + 1 < csv_files.size() ? ", \\\n" : "\n");
    }
    return os.str();
}

const std::vector<std::string> coded_csv_columns{
    "system",   "rate",       "code",    "n",       "k",          "m",
    "seed",     "snr_db",     "ebn0_db", "ber_pre", "ber_pre_exact", "mi_norm",
    "mi_se",    "gmi_norm",   "gmi_se",  "ber_pos", "bit_errors", "frames",
    "frame_errors", "avg_iterations", "stop"};

CsvTable coded_table(const std::vector<CodedRow>& rows, std::uint64_t seed)
{
    CsvTable t;
    t.header = coded_csv_columns;
    for (const auto& r : rows) {
        const double m = r.m;
        t.rows.push_back({r.system,
                          r.rate_nominal,
                          r.code,
                          std::to_string(r.n),
                          std::to_string(r.k),
                          std::to_string(r.m),
                          std::to_string(seed),
                          format_number(r.snr_db),
                          format_number(r.ebn0_db),
                          format_number(r.ber_pre),
                          format_number(r.ber_pre_exact),
                          format_number(r.mi / m),
                          format_number(r.mi_se / m),
                          format_number(r.gmi / m),
                          format_number(r.gmi_se / m),
                          format_number(r.post.ber_pos),
                          std::to_string(r.post.bit_errors),
                          std::to_string(r.post.frames),
                          std::to_string(r.post.frame_errors),
                          format_number(r.post.avg_iterations),
                          r.post.hit_target ? "target-errors" : "max-frames"});
    }
    return t;
}

std::vector<CodedRow> coded_rows_from_table(const CsvTable& t)
{
    for (const auto& c : coded_csv_columns)
        t.column(c);
    std::vector<CodedRow> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        CodedRow r;
        r.system = t.text(i, "system");
        r.rate_nominal = t.text(i, "rate");
        r.code = t.text(i, "code");
        r.n = static_cast<std::size_t>(t.number(i, "n"));
        r.k = static_cast<std::size_t>(t.number(i, "k"));
        r.m = static_cast<int>(t.number(i, "m"));
        if (r.m <= 0)
            throw ParseError("m must be positive", i + 2);
        r.snr_db = t.number(i, "snr_db");
        r.ebn0_db = t.number(i, "ebn0_db");
        r.ber_pre = t.number(i, "ber_pre");
        r.ber_pre_exact = t.number(i, "ber_pre_exact");
        r.mi = t.number(i, "mi_norm") * r.m;
        r.mi_se = t.number(i, "mi_se") * r.m;
        r.gmi = t.number(i, "gmi_norm") * r.m;
        r.gmi_se = t.number(i, "gmi_se") * r.m;
        r.post.ber_pos = t.number(i, "ber_pos");
        r.post.bit_errors = static_cast<std::size_t>(t.number(i, "bit_errors"));
        r.post.frames = static_cast<std::size_t>(t.number(i, "frames"));
        r.post.frame_errors = static_cast<std::size_t>(t.number(i, "frame_errors"));
        r.post.avg_iterations = t.number(i, "avg_iterations");
        r.post.info_bits_per_frame = r.k;
        const auto& stop = t.text(i, "stop");
        if (stop != "target-errors" && stop != "max-frames")
            throw ParseError("unknown stop value '" + stop + "'", i + 2);
        r.post.hit_target = stop == "target-errors";
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace cm4d::harness
