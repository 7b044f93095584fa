#include "cm4d/ldpc.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace cm4d;

namespace {

// Rank over GF(2) by Gaussian elimination on std::vector<bool> rows.
std::size_t rank_oracle(std::size_t n, const std::vector<std::vector<std::uint32_t>>& rows)
{
    std::vector<std::vector<bool>> a;
    for (const auto& r : rows) {
        std::vector<bool> v(n, false);
        for (auto j : r)
            v[j] = !v[j];
        a.push_back(v);
    }
    std::size_t rank = 0;
    for (std::size_t col = 0; col < n && rank < a.size(); ++col) {
        std::size_t p = rank;
        while (p < a.size() && !a[p][col])
            ++p;
        if (p == a.size())
            continue;
        std::swap(a[p], a[rank]);
        for (std::size_t i = 0; i < a.size(); ++i)
            if (i != rank && a[i][col])
                for (std::size_t j = 0; j < n; ++j)
                    a[i][j] = a[i][j] != a[rank][j];
        ++rank;
    }
    return rank;
}

std::vector<std::uint8_t> random_bits(std::size_t k, std::mt19937_64& g)
{
    std::vector<std::uint8_t> v(k);
    for (auto& b : v)
        b = g() & 1;
    return v;
}

LabeledConstellation pm_qpsk()
{
    const auto p = pam_points(2);
    return {normalize_energy(product_constellation({p, p, p, p}, "pm-qpsk")),
            product_labeling({brgc(1), brgc(1), brgc(1), brgc(1)})};
}

LabeledConstellation bpsk()
{
    return {Constellation("bpsk", {Point4{-1, 0, 0, 0}, Point4{1, 0, 0, 0}}), nbc(1)};
}

std::filesystem::path temp_file(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("cm4d_ldpc_" + name);
}

} // namespace

TEST_CASE("regular Gallager construction")
{
    const auto code = gallager_regular(96, 3, 6, 1);
    CHECK(code.n() == 96);
    CHECK(code.checks() == 48);
    for (std::size_t j = 0; j < code.n(); ++j)
        CHECK(code.col(j).size() == 3);
    for (std::size_t r = 0; r < code.checks(); ++r)
        CHECK(code.row(r).size() == 6);
    CHECK(code.rank() == rank_oracle(code.n(), code.rows()));
    CHECK(code.rank() == gf2_rank(code.n(), code.rows()));
    CHECK(code.k() == code.n() - code.rank());
    CHECK(code.rate() >= 0.5);
    CHECK(code.is_codeword(std::vector<std::uint8_t>(96, 0)));

    const auto again = gallager_regular(96, 3, 6, 1);
    CHECK(again.rows() == code.rows());

    const auto big = gallager_regular(2000, 3, 6, 4);
    CHECK(count_four_cycles(big) == 0);
    CHECK(big.rank() == rank_oracle(big.n(), big.rows()));

    CHECK_THROWS_AS(gallager_regular(97, 3, 6, 1), std::invalid_argument);
    CHECK_THROWS_AS(gallager_regular(96, 1, 6, 1), std::invalid_argument);
    CHECK_THROWS_AS(gallager_regular(96, 6, 6, 1), std::invalid_argument);
}

TEST_CASE("four-cycle counting")
{
    // Checks {0,1,2} and {0,1,3} share two variables.
    const LdpcCode c(4, {{0, 1, 2}, {0, 1, 3}});
    CHECK(count_four_cycles(c) == 1);
    CHECK(count_four_cycles(hamming_7_4()) > 0);
}

TEST_CASE("encoding")
{
    std::mt19937_64 g(5);
    for (const auto& code : {gallager_regular(96, 3, 6, 2), gallager_regular(240, 3, 12, 3),
                             hamming_7_4()}) {
        const auto zero = code.encode(std::vector<std::uint8_t>(code.k(), 0));
        CHECK(std::all_of(zero.begin(), zero.end(), [](auto b) { return b == 0; }));
        for (int t = 0; t < 100; ++t) {
            const auto info = random_bits(code.k(), g);
            const auto cw = code.encode(info);
            REQUIRE(code.is_codeword(cw));
            for (std::size_t i = 0; i < code.k(); ++i)
                CHECK(cw[code.info_positions()[i]] == info[i]);
            const auto cw2 = code.encode(random_bits(code.k(), g));
            std::vector<std::uint8_t> sum(cw.size());
            for (std::size_t i = 0; i < cw.size(); ++i)
                sum[i] = cw[i] ^ cw2[i];
            CHECK(code.is_codeword(sum));
        }
    }
    CHECK(hamming_7_4().k() == 4);
    CHECK_THROWS(hamming_7_4().encode(std::vector<std::uint8_t>(3, 0)));
}

TEST_CASE("alist files")
{
    const auto path = temp_file("code.alist");
    const auto code = gallager_regular(96, 3, 6, 8);
    to_alist(code, path);
    const auto back = from_alist(path);
    CHECK(back.n() == code.n());
    CHECK(back.k() == code.k());
    for (std::size_t r = 0; r < code.checks(); ++r) {
        auto a = std::vector<std::uint32_t>(code.row(r).begin(), code.row(r).end());
        auto b = std::vector<std::uint32_t>(back.row(r).begin(), back.row(r).end());
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        CHECK(a == b);
    }

    // Hamming code in alist form, written by hand.
    std::ofstream(path) << "7 3\n3 4\n1 1 2 1 2 2 3\n4 4 4\n"
                           "3 0 0\n2 0 0\n2 3 0\n1 0 0\n1 3 0\n1 2 0\n1 2 3\n"
                           "4 5 6 7\n2 3 6 7\n1 3 5 7\n";
    const auto h = from_alist(path);
    CHECK(h.n() == 7);
    CHECK(h.k() == 4);

    // Column list with a missing entry.
    std::ofstream(path) << "7 3\n3 4\n1 1 2 1 2 2 3\n4 4 4\n"
                           "3 0 0\n2 0 0\n2 3 0\n1 0 0\n1 3 0\n1 2 0\n1 2\n"
                           "4 5 6 7\n2 3 6 7\n1 3 5 7\n";
    try {
        from_alist(path);
        FAIL("accepted a short column");
    } catch (const ParseError& e) {
        CHECK(e.line() == 11);
    }

    // Wrong number of column weights.
    std::ofstream(path) << "7 3\n3 4\n1 1 2 1 2 2\n4 4 4\n";
    CHECK_THROWS_AS(from_alist(path), ParseError);

    // Rows disagree with columns.
    std::ofstream(path) << "7 3\n3 4\n1 1 2 1 2 2 3\n4 4 4\n"
                           "3 0 0\n2 0 0\n2 3 0\n1 0 0\n1 3 0\n1 2 0\n1 2 3\n"
                           "4 5 6 7\n2 3 6 7\n1 2 5 7\n";
    CHECK_THROWS_AS(from_alist(path), ParseError);
    std::filesystem::remove(path);
}

TEST_CASE("interleaving")
{
    std::mt19937_64 g(1);
    const auto bits = random_bits(12, g);
    const auto id = identity_interleaver(12, 1);
    const auto m1 = interleave(bits, id);
    CHECK(m1.rows == 12);
    CHECK(m1.data == bits);

    const auto map = make_interleaver(12, 4, 9);
    CHECK(map.ns() == 3);
    const auto mat = interleave(bits, map);
    for (std::size_t j = 0; j < 12; ++j)
        CHECK(mat(j / 4, j % 4) == bits[map.perm[j]]);

    std::vector<double> llr(12);
    for (std::size_t j = 0; j < 12; ++j)
        llr[j] = mat.data[j] ? 1.0 + j : -1.0 - j;
    const auto back = deinterleave(llr, map);
    for (std::size_t i = 0; i < 12; ++i)
        CHECK((back[i] > 0) == (bits[i] == 1));

    CHECK_THROWS_AS(make_interleaver(10, 4, 1), std::invalid_argument);
    CHECK(padded_length(10, 4) == 12);
    CHECK(padded_length(12, 4) == 12);
}

TEST_CASE("sum-product decoding")
{
    const auto code = gallager_regular(96, 3, 6, 2);
    std::mt19937_64 g(3);
    const auto cw = code.encode(random_bits(code.k(), g));
    std::vector<double> llr(cw.size());
    for (std::size_t i = 0; i < cw.size(); ++i)
        llr[i] = cw[i] ? 25.0 : -25.0;
    const auto r = decode_sumproduct(code, llr);
    CHECK(r.converged);
    CHECK(r.iterations <= 1);
    CHECK(r.bits == cw);

    const auto z = decode_sumproduct(code, std::vector<double>(96, 0.0), 7);
    CHECK(z.iterations == 7);
}

TEST_CASE("Hamming code single errors match ML")
{
    const auto h = hamming_7_4();
    std::vector<std::vector<std::uint8_t>> book;
    for (std::uint32_t w = 0; w < 16; ++w)
        book.push_back(h.encode(std::vector<std::uint8_t>{std::uint8_t(w >> 3 & 1), std::uint8_t(w >> 2 & 1),
                                 std::uint8_t(w >> 1 & 1), std::uint8_t(w & 1)}));
    for (const auto& cw : book)
        for (std::size_t flip = 0; flip < 7; ++flip) {
            std::vector<double> llr(7);
            for (std::size_t i = 0; i < 7; ++i)
                llr[i] = (cw[i] ? 3.0 : -3.0) * (i == flip ? -0.5 : 1.0);
            // ML over all codewords with ONE_OVER_ZERO LLRs.
            double best = -INFINITY;
            std::size_t arg = 0;
            for (std::size_t c = 0; c < 16; ++c) {
                double s = 0.0;
                for (std::size_t i = 0; i < 7; ++i)
                    s += book[c][i] ? llr[i] / 2 : -llr[i] / 2;
                if (s > best) {
                    best = s;
                    arg = c;
                }
            }
            const auto r = decode_sumproduct(h, llr);
            CHECK(r.bits == book[arg]);
            CHECK(r.converged);
        }
}

TEST_CASE("coded chain extremes")
{
    const auto lc = pm_qpsk();
    const auto code = gallager_regular(1200, 3, 6, 5);
    const auto map = make_interleaver(padded_length(code.n(), 4), 4, 7);
    CodedPointOptions opt;
    opt.max_frames = 100;
    opt.target_errors = 1000000;
    const auto hi = run_coded_point(lc, code, map, snr_point(15.0, 2), 3, opt);
    CHECK(hi.frames == 100);
    CHECK(hi.bit_errors == 0);
    CHECK(hi.ber_pos == 0.0);
    CHECK_FALSE(hi.hit_target);

    opt.max_frames = 40;
    const auto lo = run_coded_point(lc, code, map, snr_point(-30.0, 2), 3, opt);
    CHECK(std::abs(lo.ber_pos - 0.5) <= 0.05);
    CHECK(lo.ber_pos == doctest::Approx(double(lo.bit_errors) / (lo.frames * code.k())));
}

TEST_CASE("converged frames have zero syndrome")
{
    const auto lc = pm_qpsk();
    const auto code = gallager_regular(600, 3, 6, 5);
    const auto map = make_interleaver(padded_length(code.n(), 4), 4, 1);
    for (std::uint64_t f = 0; f < 60; ++f) {
        const auto out = run_coded_frame(lc, code, map, snr_point(1.0 + f % 3, 2), 11, f);
        if (out.converged)
            CHECK(out.bit_errors == 0);
    }
    // Direct check on decoder outputs at a noisy operating point.
    std::mt19937_64 g(4);
    std::normal_distribution<double> noise(0.0, 1.0);
    int converged = 0;
    for (int t = 0; t < 200; ++t) {
        const auto cw = code.encode(random_bits(code.k(), g));
        std::vector<double> llr(cw.size());
        for (std::size_t i = 0; i < cw.size(); ++i)
            llr[i] = 2.0 * ((cw[i] ? 1.0 : -1.0) + 0.8 * noise(g)) / 0.64;
        const auto r = decode_sumproduct(code, llr);
        if (r.converged) {
            ++converged;
            const auto s = code.syndrome(r.bits);
            CHECK(std::all_of(s.begin(), s.end(), [](auto b) { return b == 0; }));
        }
    }
    CHECK(converged > 0);
}

TEST_CASE("coded points are independent of the worker count")
{
    const auto lc = pm_qpsk();
    const auto code = gallager_regular(600, 3, 6, 5);
    const auto map = make_interleaver(padded_length(code.n(), 4), 4, 1);
    CodedPointOptions opt;
    opt.target_errors = 50;
    opt.max_frames = 96;
    opt.workers = 1;
    const auto a = run_coded_point(lc, code, map, snr_point(3.0, 2), 17, opt);
    opt.workers = 8;
    const auto b = run_coded_point(lc, code, map, snr_point(3.0, 2), 17, opt);
    CHECK(a.frames == b.frames);
    CHECK(a.bit_errors == b.bit_errors);
    CHECK(a.avg_iterations == b.avg_iterations);
}

TEST_CASE("waterfall of a rate-1/2 code")
{
    // BPSK with a (3,6) code: threshold above 1 dB and below 3 dB Eb/N0.
    const auto lc = bpsk();
    const auto code = gallager_regular(4000, 3, 6, 12);
    const auto map = identity_interleaver(code.n(), 1);
    const double eta = code.rate();
    CodedPointOptions opt;
    opt.target_errors = 200;
    opt.max_frames = 200;
    auto at = [&](double ebn0_db) {
        return run_coded_point(lc, code, map, snr_point(ebn0_db + linear_to_db(eta), eta), 2, opt)
            .ber_pos;
    };
    CHECK(at(1.0) > 1e-3);
    CHECK(at(3.0) < 1e-3);

    // PM-QPSK on the same code: two orders of magnitude within 1.5 dB.
    const auto q = pm_qpsk();
    const auto qmap = make_interleaver(code.n(), 4, 3);
    std::vector<double> ber;
    for (double db = 0.0; db <= 6.0; db += 0.25)
        ber.push_back(run_coded_point(q, code, qmap, snr_point(db, 2 * eta), 2, opt).ber_pos);
    bool found = false;
    for (std::size_t i = 0; i + 6 < ber.size(); ++i)
        if (ber[i] > 0 && ber[i + 6] <= ber[i] / 100)
            found = true;
    CHECK(found);
}
