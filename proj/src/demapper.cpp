#include "cm4d/demapper.hpp"

#include "cm4d/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cm4d {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();
constexpr std::size_t chunk = 2048;

LlrBlock make_block(std::span<const Point4> received, const LabeledConstellation& lc,
                    LlrConvention convention, LlrKind kind, BitMatrix true_bits)
{
    if (true_bits.rows != 0 &&
        (true_bits.rows != received.size() || true_bits.cols != static_cast<std::size_t>(lc.m())))
        throw std::invalid_argument("true bit matrix does not match the received block");
    LlrBlock b;
    b.ns = received.size();
    b.m = static_cast<std::size_t>(lc.m());
    b.llrs.assign(b.ns * b.m, 0.0);
    b.true_bits = std::move(true_bits);
    b.convention = convention;
    b.kind = kind;
    return b;
}

template <typename PerSymbol>
void for_each_symbol(std::size_t ns, std::size_t workers, PerSymbol&& fn)
{
    const std::size_t chunks = (ns + chunk - 1) / chunk;
    parallel_for(chunks, workers, [&](std::size_t c) {
        const std::size_t end = std::min(ns, (c + 1) * chunk);
        for (std::size_t n = c * chunk; n < end; ++n)
            fn(n);
    });
}

double subset_lse(std::span<const double> metric, std::span<const std::size_t> subset)
{
    double mx = neg_inf;
    for (std::size_t i : subset)
        mx = std::max(mx, metric[i]);
    if (mx == neg_inf)
        return mx;
    double s = 0.0;
    for (std::size_t i : subset)
        s += std::exp(metric[i] - mx);
    return mx + std::log(s);
}

} // namespace

double log_sum_exp(std::span<const double> v)
{
    double mx = neg_inf;
    for (double x : v)
        mx = std::max(mx, x);
    if (mx == neg_inf)
        return mx;
    double s = 0.0;
    for (double x : v)
        s += std::exp(x - mx);
    return mx + std::log(s);
}

LlrBlock exact_llrs(std::span<const Point4> received, const LabeledConstellation& lc,
                    const SnrPoint& snr, LlrConvention convention, BitMatrix true_bits,
                    std::size_t workers)
{
    LlrBlock out = make_block(received, lc, convention, LlrKind::exact, std::move(true_bits));
    const auto pts = lc.constellation().points();
    const std::size_t M = pts.size();
    const int m = lc.m();
    const double inv_n0 = 1.0 / snr.n0;
    const double sign = convention == LlrConvention::one_over_zero ? 1.0 : -1.0;

    for_each_symbol(out.ns, workers, [&](std::size_t n) {
        thread_local std::vector<double> metric, weight;
        metric.resize(M);
        weight.resize(M);
        double mx = neg_inf;
        for (std::size_t i = 0; i < M; ++i) {
            metric[i] = -squared_distance(received[n], pts[i]) * inv_n0;
            mx = std::max(mx, metric[i]);
        }
        for (std::size_t i = 0; i < M; ++i)
            weight[i] = std::exp(metric[i] - mx);
        for (int k = 0; k < m; ++k) {
            double lse[2];
            for (int b = 0; b < 2; ++b) {
                double s = 0.0;
                for (std::size_t i : lc.subset(k, b))
                    s += weight[i];
                // Far subsets underflow against the global maximum; redo them
                // against their own maximum.
                lse[b] = s > 1e-250 ? mx + std::log(s) : subset_lse(metric, lc.subset(k, b));
            }
            out.llrs[n * out.m + k] = sign * (lse[1] - lse[0]);
        }
    });
    return out;
}

LlrBlock maxlog_llrs(std::span<const Point4> received, const LabeledConstellation& lc,
                     const SnrPoint& snr, LlrConvention convention, BitMatrix true_bits,
                     std::size_t workers)
{
    LlrBlock out = make_block(received, lc, convention, LlrKind::maxlog, std::move(true_bits));
    const auto pts = lc.constellation().points();
    const std::size_t M = pts.size();
    const int m = lc.m();
    const double inv_n0 = 1.0 / snr.n0;
    const double sign = convention == LlrConvention::one_over_zero ? 1.0 : -1.0;

    for_each_symbol(out.ns, workers, [&](std::size_t n) {
        thread_local std::vector<double> dist;
        dist.resize(M);
        for (std::size_t i = 0; i < M; ++i)
            dist[i] = squared_distance(received[n], pts[i]);
        for (int k = 0; k < m; ++k) {
            double best[2];
            for (int b = 0; b < 2; ++b) {
                double d = std::numeric_limits<double>::infinity();
                for (std::size_t i : lc.subset(k, b))
                    d = std::min(d, dist[i]);
                best[b] = d;
            }
            out.llrs[n * out.m + k] = sign * (best[0] - best[1]) * inv_n0;
        }
    });
    return out;
}

LlrBlock factorized_llrs(std::span<const Point4> received, const LabeledConstellation& lc,
                         const SnrPoint& snr, LlrConvention convention, BitMatrix true_bits,
                         std::size_t workers)
{
    const auto f = factorize(lc);
    if (!f)
        throw std::invalid_argument("constellation '" + lc.name() +
                                    "' is not a product with per-dimension bits");
    LlrBlock out = make_block(received, lc, convention, LlrKind::exact, std::move(true_bits));
    const int m = lc.m();
    const double inv_n0 = 1.0 / snr.n0;
    const double sign = convention == LlrConvention::one_over_zero ? 1.0 : -1.0;

    for_each_symbol(out.ns, workers, [&](std::size_t n) {
        thread_local std::vector<double> metric;
        for (int k = 0; k < m; ++k) {
            const BitFactor& bf = f->bits[k];
            const auto& levels = f->product.levels[bf.dim];
            const double y = received[n][bf.dim];
            metric.resize(levels.size());
            double mx[2] = {neg_inf, neg_inf};
            for (std::size_t a = 0; a < levels.size(); ++a) {
                const double d = y - levels[a];
                metric[a] = -d * d * inv_n0;
                mx[bf.bit_of_level[a]] = std::max(mx[bf.bit_of_level[a]], metric[a]);
            }
            double s[2] = {0.0, 0.0};
            for (std::size_t a = 0; a < levels.size(); ++a) {
                const int b = bf.bit_of_level[a];
                s[b] += std::exp(metric[a] - mx[b]);
            }
            const double l1 = mx[1] + std::log(s[1]);
            const double l0 = mx[0] + std::log(s[0]);
            out.llrs[n * out.m + k] = sign * (l1 - l0);
        }
    });
    return out;
}

BitMatrix hard_decisions(const LlrBlock& llrs)
{
    BitMatrix hd(llrs.ns, llrs.m);
    for (std::size_t n = 0; n < llrs.ns; ++n)
        for (std::size_t k = 0; k < llrs.m; ++k)
            hd(n, k) = llrs.one_over_zero(n, k) > 0.0 ? 1 : 0;
    return hd;
}

BerStats prefec_ber(const LlrBlock& llrs)
{
    if (llrs.true_bits.rows != llrs.ns || llrs.true_bits.cols != llrs.m)
        throw std::invalid_argument("pre-FEC BER needs the transmitted bits");
    BerStats s;
    for (std::size_t n = 0; n < llrs.ns; ++n)
        for (std::size_t k = 0; k < llrs.m; ++k) {
            const std::uint8_t hd = llrs.one_over_zero(n, k) > 0.0 ? 1 : 0;
            s.bit_errors += hd != llrs.true_bits(n, k);
        }
    s.bits_counted = llrs.ns * llrs.m;
    s.ber_pre = s.bits_counted ? static_cast<double>(s.bit_errors) / s.bits_counted : 0.0;
    return s;
}

} // namespace cm4d
