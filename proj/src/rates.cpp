#include "cm4d/rates.hpp"

#include "cm4d/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>

namespace cm4d {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();
constexpr double log2e = std::numbers::log2e;
constexpr std::size_t mc_chunk = 4096;

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

struct Moments {
    double sum = 0.0;
    double sum_sq = 0.0;

    void add(double v)
    {
        sum += v;
        sum_sq += v * v;
    }
    void merge(const Moments& o)
    {
        sum += o.sum;
        sum_sq += o.sum_sq;
    }
    double mean(std::size_t n) const { return sum / static_cast<double>(n); }
    double std_error(std::size_t n) const
    {
        if (n < 2)
            return 0.0;
        const double nd = static_cast<double>(n);
        const double mu = sum / nd;
        const double var = std::max(0.0, (sum_sq - nd * mu * mu) / (nd - 1.0));
        return std::sqrt(var / nd);
    }
};

struct ChunkResult {
    Moments mi, gmi, diff;
    std::vector<double> per_bit;
};

// Per-dimension view used by the product evaluation.
// 1D natural-log terms for one dimension: metric of each level and their lse.
double lse_levels(const std::vector<double>& levels, double y, double inv_n0,
                  std::vector<double>& metric)
{
    metric.resize(levels.size());
    double mx = neg_inf;
    for (std::size_t a = 0; a < levels.size(); ++a) {
        const double d = y - levels[a];
        metric[a] = -d * d * inv_n0;
        mx = std::max(mx, metric[a]);
    }
    double s = 0.0;
    for (double v : metric)
        s += std::exp(v - mx);
    return mx + std::log(s);
}

double lse_where(const std::vector<double>& metric, const std::vector<std::uint8_t>& bit_of,
                 int b)
{
    double mx = neg_inf;
    for (std::size_t a = 0; a < metric.size(); ++a)
        if (bit_of[a] == b)
            mx = std::max(mx, metric[a]);
    double s = 0.0;
    for (std::size_t a = 0; a < metric.size(); ++a)
        if (bit_of[a] == b)
            s += std::exp(metric[a] - mx);
    return mx + std::log(s);
}

class McEvaluator {
public:
    McEvaluator(const Constellation& c, const LabeledConstellation* lc, const SnrPoint& snr,
                const McOptions& opt)
        : c_(c), lc_(lc), snr_(snr), opt_(opt), M_(c.size()), m_(lc ? lc->m() : 0)
    {
        if (opt.allow_factorized) {
            product_ = product_structure(c);
            if (lc)
                factor_ = factorize(*lc);
        }
        if (lc && !factor_) {
            bit_mask_.assign(static_cast<std::size_t>(m_) * M_, 0.0);
            for (int k = 0; k < m_; ++k)
                for (std::size_t i : lc->subset(k, 1))
                    bit_mask_[k * M_ + i] = 1.0;
        }
    }

    ChunkResult run_chunk(std::size_t chunk) const
    {
        ChunkResult r;
        r.per_bit.assign(static_cast<std::size_t>(m_), 0.0);
        const std::size_t begin = chunk * mc_chunk;
        const std::size_t end = std::min(opt_.samples, begin + mc_chunk);
        const double inv_n0 = 1.0 / snr_.n0;
        const double logM = std::log(static_cast<double>(M_));
        const auto pts = c_.points();

        std::vector<double> metric(M_), weight(M_), dim_metric[4];
        std::vector<double> bit_terms(static_cast<std::size_t>(m_));
        const bool need_generic = !product_ || (lc_ && !factor_);

        for (std::size_t n = begin; n < end; ++n) {
            const std::size_t t = draw_index(opt_.seed, n, M_);
            const Point4 z = noise_sample(opt_.seed, n, snr_.n0);
            const Point4& x = pts[t];
            const Point4 y{x[0] + z[0], x[1] + z[1], x[2] + z[2], x[3] + z[3]};

            double lse_all = 0.0, mx = neg_inf;
            if (need_generic) {
                for (std::size_t i = 0; i < M_; ++i) {
                    metric[i] = -squared_distance(y, pts[i]) * inv_n0;
                    mx = std::max(mx, metric[i]);
                }
                double s = 0.0;
                for (std::size_t i = 0; i < M_; ++i) {
                    weight[i] = std::exp(metric[i] - mx);
                    s += weight[i];
                }
                lse_all = mx + std::log(s);
            }

            double mi_term;
            std::array<double, 4> dim_lse{};
            if (product_) {
                mi_term = 0.0;
                for (int d = 0; d < 4; ++d) {
                    const auto& lv = product_->levels[d];
                    dim_lse[d] = lse_levels(lv, y[d], inv_n0, dim_metric[d]);
                    const double own = dim_metric[d][product_->level_index[t][d]];
                    mi_term += own - dim_lse[d] + std::log(static_cast<double>(lv.size()));
                }
            } else {
                mi_term = metric[t] - lse_all + logM;
            }

            double gmi_term = 0.0;
            if (lc_) {
                for (int k = 0; k < m_; ++k) {
                    const int b = lc_->labeling().bit(t, k);
                    double term;
                    if (factor_) {
                        const BitFactor& bf = factor_->bits[k];
                        term = std::numbers::ln2 +
                               lse_where(dim_metric[bf.dim], bf.bit_of_level, b) -
                               dim_lse[bf.dim];
                    } else {
                        const double* mask = &bit_mask_[k * M_];
                        double s = 0.0;
                        if (b)
                            for (std::size_t i = 0; i < M_; ++i)
                                s += weight[i] * mask[i];
                        else
                            for (std::size_t i = 0; i < M_; ++i)
                                s += weight[i] * (1.0 - mask[i]);
                        const double lse_b =
                            s > 1e-280 ? mx + std::log(s) : subset_lse(metric, lc_->subset(k, b));
                        term = std::numbers::ln2 + lse_b - lse_all;
                    }
                    bit_terms[k] = term;
                    gmi_term += term;
                }
                for (int k = 0; k < m_; ++k)
                    r.per_bit[k] += bit_terms[k] * log2e;
            }
            r.mi.add(mi_term * log2e);
            r.gmi.add(gmi_term * log2e);
            r.diff.add((mi_term - gmi_term) * log2e);
        }
        return r;
    }

private:
    static double subset_lse(const std::vector<double>& metric, std::span<const std::size_t> idx)
    {
        double mx = neg_inf;
        for (std::size_t i : idx)
            mx = std::max(mx, metric[i]);
        double s = 0.0;
        for (std::size_t i : idx)
            s += std::exp(metric[i] - mx);
        return mx + std::log(s);
    }

    const Constellation& c_;
    const LabeledConstellation* lc_;
    SnrPoint snr_;
    McOptions opt_;
    std::size_t M_;
    int m_;
    std::optional<ProductStructure> product_;
    std::optional<Factorization> factor_;
    std::vector<double> bit_mask_;
};

McRates run_mc(const Constellation& c, const LabeledConstellation* lc, const SnrPoint& snr,
               const McOptions& opt)
{
    if (opt.samples < 2)
        throw std::invalid_argument("Monte Carlo needs at least two samples");
    McEvaluator eval(c, lc, snr, opt);
    const std::size_t chunks = (opt.samples + mc_chunk - 1) / mc_chunk;
    std::vector<ChunkResult> parts(chunks);
    parallel_for(chunks, opt.workers, [&](std::size_t i) { parts[i] = eval.run_chunk(i); });

    // Fixed reduction order keeps results independent of the worker count.
    ChunkResult total;
    const int m = lc ? lc->m() : 0;
    total.per_bit.assign(static_cast<std::size_t>(m), 0.0);
    for (const auto& p : parts) {
        total.mi.merge(p.mi);
        total.gmi.merge(p.gmi);
        total.diff.merge(p.diff);
        for (int k = 0; k < m; ++k)
            total.per_bit[k] += p.per_bit[k];
    }

    const std::size_t n = opt.samples;
    McRates out;
    out.mi = {total.mi.mean(n), total.mi.std_error(n), RateMethod::monte_carlo, n, {}, false};
    out.gmi = {total.gmi.mean(n), total.gmi.std_error(n), RateMethod::monte_carlo, n, {}, false};
    for (int k = 0; k < m; ++k)
        out.gmi.per_bit.push_back(total.per_bit[k] / static_cast<double>(n));
    out.diff_std_error = total.diff.std_error(n);
    return out;
}

} // namespace

const char* to_string(RateMethod m)
{
    switch (m) {
    case RateMethod::gauss_hermite:
        return "gauss-hermite";
    case RateMethod::monte_carlo:
        return "monte-carlo";
    case RateMethod::llr_samples:
        return "llr-samples";
    }
    return "?";
}

double capacity_awgn4(double gamma)
{
    if (gamma < 0.0)
        throw std::invalid_argument("SNR must be nonnegative");
    return 2.0 * std::log2(1.0 + gamma / 2.0);
}

McRates rates_mc(const LabeledConstellation& lc, const SnrPoint& snr, const McOptions& opt)
{
    return run_mc(lc.constellation(), &lc, snr, opt);
}

RateEstimate mi_mc(const Constellation& c, const SnrPoint& snr, const McOptions& opt)
{
    return run_mc(c, nullptr, snr, opt).mi;
}

RateEstimate gmi_mc(const LabeledConstellation& lc, const SnrPoint& snr, const McOptions& opt)
{
    return run_mc(lc.constellation(), &lc, snr, opt).gmi;
}

namespace {

void check_nodes(int nodes)
{
    if (nodes < 10 || nodes > 64)
        throw std::invalid_argument("Gauss-Hermite node count must be in [10, 64]");
}

// E over the uniform input level and z = sqrt(N0) t of a per-(level, y) term.
template <typename Term>
double gh_average(const std::vector<double>& levels, double n0, const GaussHermiteRule& rule,
                  Term&& term)
{
    const double scale = std::sqrt(n0);
    const double norm = 1.0 / std::sqrt(std::numbers::pi);
    double total = 0.0;
    for (std::size_t a = 0; a < levels.size(); ++a) {
        double acc = 0.0;
        for (std::size_t j = 0; j < rule.nodes.size(); ++j)
            acc += rule.weights[j] * term(a, levels[a] + scale * rule.nodes[j]);
        total += norm * acc;
    }
    return total / static_cast<double>(levels.size());
}

} // namespace

RateEstimate mi_gh_product(const Constellation& c, const SnrPoint& snr, int nodes)
{
    check_nodes(nodes);
    const auto ps = product_structure(c);
    if (!ps)
        throw std::invalid_argument("constellation '" + c.name() + "' is not a Cartesian product");
    const auto rule = gauss_hermite(nodes);
    const double inv_n0 = 1.0 / snr.n0;
    double mi = 0.0;
    for (int d = 0; d < 4; ++d) {
        const auto& lv = ps->levels[d];
        if (lv.size() < 2)
            continue;
        std::vector<double> metric;
        const double logL = std::log(static_cast<double>(lv.size()));
        mi += gh_average(lv, snr.n0, rule, [&](std::size_t a, double y) {
            const double lse = lse_levels(lv, y, inv_n0, metric);
            return metric[a] - lse + logL;
        });
    }
    return {mi * log2e, 0.0, RateMethod::gauss_hermite, static_cast<std::size_t>(nodes), {}, false};
}

RateEstimate gmi_gh_product(const LabeledConstellation& lc, const SnrPoint& snr, int nodes)
{
    check_nodes(nodes);
    const auto f = factorize(lc);
    if (!f)
        throw std::invalid_argument("constellation '" + lc.name() +
                                    "' is not a product with per-dimension bits");
    const auto rule = gauss_hermite(nodes);
    const double inv_n0 = 1.0 / snr.n0;
    RateEstimate out{0.0, 0.0, RateMethod::gauss_hermite, static_cast<std::size_t>(nodes), {}, false};
    for (const BitFactor& bf : f->bits) {
        const auto& lv = f->product.levels[bf.dim];
        std::vector<double> metric;
        const double v = gh_average(lv, snr.n0, rule, [&](std::size_t a, double y) {
            const double lse = lse_levels(lv, y, inv_n0, metric);
            return std::numbers::ln2 + lse_where(metric, bf.bit_of_level, bf.bit_of_level[a]) - lse;
        });
        out.per_bit.push_back(v * log2e);
        out.value += v * log2e;
    }
    return out;
}

RateEstimate gmi_from_llrs(const LlrBlock& llrs)
{
    if (llrs.true_bits.rows != llrs.ns || llrs.true_bits.cols != llrs.m)
        throw std::invalid_argument("GMI from LLRs needs the transmitted bits");
    if (llrs.ns < 2)
        throw std::invalid_argument("GMI from LLRs needs at least two symbols");
    Moments total;
    std::vector<double> per_bit(llrs.m, 0.0);
    for (std::size_t n = 0; n < llrs.ns; ++n) {
        double sym = 0.0;
        for (std::size_t k = 0; k < llrs.m; ++k) {
            const double sgn = llrs.true_bits(n, k) ? 1.0 : -1.0;
            const double v = 1.0 - softplus(-sgn * llrs.one_over_zero(n, k)) * log2e;
            per_bit[k] += v;
            sym += v;
        }
        total.add(sym);
    }
    RateEstimate out{total.mean(llrs.ns), total.std_error(llrs.ns), RateMethod::llr_samples,
                     llrs.ns, {}, llrs.kind == LlrKind::maxlog};
    for (double v : per_bit)
        out.per_bit.push_back(v / static_cast<double>(llrs.ns));
    return out;
}

} // namespace cm4d
