#include "cm4d/ldpc.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace cm4d {

namespace {

struct LineReader {
    std::ifstream in;
    std::size_t lineno = 0;

    // Next non-blank line split into integers.
    std::vector<long> next(const char* what)
    {
        std::string line;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string::npos)
                continue;
            std::istringstream is(line);
            std::vector<long> out;
            std::string tok;
            while (is >> tok) {
                try {
                    std::size_t used = 0;
                    out.push_back(std::stol(tok, &used));
                    if (used != tok.size())
                        throw std::invalid_argument(tok);
                } catch (const std::exception&) {
                    throw ParseError(std::string("non-integer token '") + tok + "' in " + what, lineno);
                }
            }
            return out;
        }
        throw ParseError(std::string("unexpected end of file reading ") + what, lineno);
    }
};

void expect_count(const std::vector<long>& v, std::size_t count, const char* what, std::size_t line)
{
    if (v.size() != count)
        throw ParseError(std::string(what) + ": expected " + std::to_string(count) +
                             " entries, got " + std::to_string(v.size()),
                         line);
}

} // namespace

LdpcCode from_alist(const std::filesystem::path& path)
{
    LineReader rd{std::ifstream(path), 0};
    if (!rd.in)
        throw ParseError("cannot open " + path.string(), 0);

    auto dims = rd.next("header");
    expect_count(dims, 2, "header", rd.lineno);
    if (dims[0] <= 0 || dims[1] <= 0)
        throw ParseError("nonpositive matrix dimensions", rd.lineno);
    const std::size_t n = static_cast<std::size_t>(dims[0]);
    const std::size_t m = static_cast<std::size_t>(dims[1]);

    auto maxw = rd.next("maximum weights");
    expect_count(maxw, 2, "maximum weights", rd.lineno);

    auto col_w = rd.next("column weights");
    expect_count(col_w, n, "column weights", rd.lineno);
    auto row_w = rd.next("row weights");
    expect_count(row_w, m, "row weights", rd.lineno);
    if (*std::max_element(col_w.begin(), col_w.end()) != maxw[0] ||
        *std::max_element(row_w.begin(), row_w.end()) != maxw[1])
        throw ParseError("maximum weights disagree with the degree lists", rd.lineno);

    std::vector<std::vector<std::uint32_t>> col_lists(n), rows(m);
    for (std::size_t j = 0; j < n; ++j) {
        auto v = rd.next("column entries");
        // Rows may be zero padded up to the maximum column weight.
        if (v.size() != static_cast<std::size_t>(maxw[0]) && v.size() != static_cast<std::size_t>(col_w[j]))
            throw ParseError("column " + std::to_string(j + 1) + ": expected " +
                                 std::to_string(col_w[j]) + " entries",
                             rd.lineno);
        for (long x : v) {
            if (x == 0)
                continue;
            if (x < 0 || static_cast<std::size_t>(x) > m)
                throw ParseError("row index " + std::to_string(x) + " out of range", rd.lineno);
            col_lists[j].push_back(static_cast<std::uint32_t>(x - 1));
        }
        if (col_lists[j].size() != static_cast<std::size_t>(col_w[j]))
            throw ParseError("column " + std::to_string(j + 1) + " weight mismatch", rd.lineno);
    }
    for (std::size_t r = 0; r < m; ++r) {
        auto v = rd.next("row entries");
        if (v.size() != static_cast<std::size_t>(maxw[1]) && v.size() != static_cast<std::size_t>(row_w[r]))
            throw ParseError("row " + std::to_string(r + 1) + ": expected " +
                                 std::to_string(row_w[r]) + " entries",
                             rd.lineno);
        for (long x : v) {
            if (x == 0)
                continue;
            if (x < 0 || static_cast<std::size_t>(x) > n)
                throw ParseError("column index " + std::to_string(x) + " out of range", rd.lineno);
            rows[r].push_back(static_cast<std::uint32_t>(x - 1));
        }
        if (rows[r].size() != static_cast<std::size_t>(row_w[r]))
            throw ParseError("row " + std::to_string(r + 1) + " weight mismatch", rd.lineno);
    }

    // Both halves must describe the same matrix.
    std::vector<std::vector<std::uint32_t>> from_rows(n);
    for (std::size_t r = 0; r < m; ++r)
        for (std::uint32_t j : rows[r])
            from_rows[j].push_back(static_cast<std::uint32_t>(r));
    for (std::size_t j = 0; j < n; ++j) {
        auto a = col_lists[j], b = from_rows[j];
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a != b)
            throw ParseError("column " + std::to_string(j + 1) + " disagrees with the row lists",
                             rd.lineno);
    }
    try {
        return LdpcCode(n, std::move(rows));
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what(), rd.lineno);
    }
}

void to_alist(const LdpcCode& code, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    std::size_t max_col = 0, max_row = 0;
    for (std::size_t j = 0; j < code.n(); ++j)
        max_col = std::max(max_col, code.col(j).size());
    for (std::size_t r = 0; r < code.checks(); ++r)
        max_row = std::max(max_row, code.row(r).size());

    out << code.n() << ' ' << code.checks() << '\n' << max_col << ' ' << max_row << '\n';
    for (std::size_t j = 0; j < code.n(); ++j)
        out << code.col(j).size() << (j + 1 < code.n() ? " " : "\n");
    for (std::size_t r = 0; r < code.checks(); ++r)
        out << code.row(r).size() << (r + 1 < code.checks() ? " " : "\n");
    auto write_list = [&](std::span<const std::uint32_t> v, std::size_t width) {
        for (std::size_t t = 0; t < width; ++t) {
            if (t)
                out << ' ';
            out << (t < v.size() ? v[t] + 1 : 0);
        }
        out << '\n';
    };
    for (std::size_t j = 0; j < code.n(); ++j)
        write_list(code.col(j), max_col);
    for (std::size_t r = 0; r < code.checks(); ++r)
        write_list(code.row(r), max_row);
}

} // namespace cm4d
