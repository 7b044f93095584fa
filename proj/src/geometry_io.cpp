#include "cm4d/geometry.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace cm4d {

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, ','))
        out.push_back(trim(cur));
    return out;
}

bool parse_double(const std::string& s, double& out)
{
    if (s.empty())
        return false;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

struct RawLabel {
    std::string text;
    std::size_t line;
};

bool all_binary_digits(const std::string& s)
{
    return !s.empty() && s.find_first_not_of("01") == std::string::npos;
}

std::uint32_t parse_label(const std::string& text, bool binary, std::size_t line)
{
    std::string digits = text;
    int base = binary ? 2 : 10;
    if (digits.rfind("0b", 0) == 0 || digits.rfind("0B", 0) == 0) {
        digits = digits.substr(2);
        base = 2;
    }
    std::uint32_t v = 0;
    const char* end = digits.data() + digits.size();
    auto [ptr, ec] = std::from_chars(digits.data(), end, v, base);
    if (digits.empty() || ec != std::errc() || ptr != end)
        throw ParseError("malformed label '" + text + "'", line);
    return v;
}

// Binary form is chosen when every label is exactly m binary digits (m >= 2);
// for m = 1 both readings agree.
std::vector<std::uint32_t> decode_labels(const std::vector<RawLabel>& raw)
{
    const std::size_t M = raw.size();
    if (M < 2 || !std::has_single_bit(M))
        throw ParseError("labeled constellation needs a power-of-two number of rows, got " +
                             std::to_string(M),
                         raw.empty() ? 0 : raw.back().line);
    const int m = std::countr_zero(M);
    bool binary = m >= 2;
    for (const auto& r : raw)
        if (!(all_binary_digits(r.text) && static_cast<int>(r.text.size()) == m))
            binary = false;
    std::vector<std::uint32_t> words;
    words.reserve(M);
    for (const auto& r : raw) {
        const std::uint32_t w = parse_label(r.text, binary, r.line);
        if (w >= M)
            throw ParseError("label " + r.text + " out of range for " + std::to_string(M) +
                                 " points",
                             r.line);
        words.push_back(w);
    }
    std::vector<std::size_t> seen(M, 0);
    for (std::size_t i = 0; i < M; ++i) {
        if (seen[words[i]])
            throw ParseError("label " + raw[i].text + " repeats line " +
                                 std::to_string(seen[words[i]]),
                             raw[i].line);
        seen[words[i]] = raw[i].line;
    }
    return words;
}

std::string format_coordinate(double v)
{
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

} // namespace

LoadedConstellation load_constellation(const std::filesystem::path& path, std::string name)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open " + path.string(), 0);
    if (name.empty())
        name = path.stem().string();

    std::vector<Point4> pts;
    std::vector<std::size_t> point_lines;
    std::vector<RawLabel> labels;
    std::optional<bool> has_label;
    bool header_allowed = true;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto fields = split_fields(line);
        if (fields.size() != 4 && fields.size() != 5)
            throw ParseError("expected 4 coordinates and an optional label, got " +
                                 std::to_string(fields.size()) + " fields",
                             lineno);
        Point4 p{};
        bool numeric = true;
        for (int d = 0; d < 4; ++d)
            numeric = numeric && parse_double(fields[d], p[d]);
        if (!numeric) {
            if (header_allowed) {
                header_allowed = false;
                continue;
            }
            throw ParseError("malformed coordinate in '" + line + "'", lineno);
        }
        header_allowed = false;
        const bool labeled = fields.size() == 5;
        if (has_label && *has_label != labeled)
            throw ParseError("label column present on some rows only", lineno);
        has_label = labeled;
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (pts[i] == p)
                throw ParseError("duplicate point (first seen on line " +
                                     std::to_string(point_lines[i]) + ")",
                                 lineno);
        pts.push_back(p);
        point_lines.push_back(lineno);
        if (labeled)
            labels.push_back({fields[4], lineno});
    }
    if (pts.size() < 2)
        throw ParseError("constellation file needs at least two points", 0);

    LoadedConstellation out{Constellation(std::move(name), std::move(pts)), std::nullopt};
    if (has_label.value_or(false))
        out.labeling = Labeling(decode_labels(labels));
    return out;
}

void save_constellation(const Constellation& c, const std::filesystem::path& path,
                        const Labeling* labeling)
{
    if (labeling && labeling->size() != c.size())
        throw std::invalid_argument("labeling size does not match constellation");
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << "# " << c.name() << ", " << c.size() << " points\n";
    for (std::size_t i = 0; i < c.size(); ++i) {
        const auto& p = c[i];
        out << format_coordinate(p[0]) << ',' << format_coordinate(p[1]) << ','
            << format_coordinate(p[2]) << ',' << format_coordinate(p[3]);
        if (labeling)
            out << ',' << format_word(labeling->word(i), labeling->m());
        out << '\n';
    }
}

Labeling load_labeling(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open " + path.string(), 0);
    std::vector<RawLabel> raw;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        raw.push_back({line, lineno});
    }
    return Labeling(decode_labels(raw));
}

void save_labeling(const Labeling& l, const std::filesystem::path& path,
                   const std::vector<std::string>& header_comments)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    for (const auto& h : header_comments)
        out << "# " << h << '\n';
    for (std::uint32_t w : l.words())
        out << format_word(w, l.m()) << '\n';
}

} // namespace cm4d
