#include "cm4d/harness.hpp"

#include "cm4d/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cm4d::harness {

std::vector<RateRow> rate_sweep(const LabeledConstellation& lc, const std::string& system_id,
                                const RateSweepOptions& opt)
{
    check_grid(opt.snr_db);
    const int m = lc.m();
    std::vector<RateRow> rows;
    for (std::size_t i = 0; i < opt.snr_db.size(); ++i) {
        const SnrPoint snr = snr_point(opt.snr_db[i], m, lc.constellation().es());
        RateRow row;
        row.system = system_id;
        row.snr_db = opt.snr_db[i];
        row.ebn0_db = snr.ebn0_db();
        row.capacity = capacity_awgn4(snr.gamma);
        if (opt.method == RateSweepMethod::gauss_hermite) {
            row.mi = mi_gh_product(lc.constellation(), snr, opt.nodes);
            row.gmi = gmi_gh_product(lc, snr, opt.nodes);
        } else {
            McOptions mc;
            mc.samples = opt.samples;
            mc.workers = opt.workers;
            mc.seed = opt.common_random_numbers ? opt.seed
                                                : rng::hash(opt.seed, rng::Stream::symbols, i);
            auto r = rates_mc(lc, snr, mc);
            row.mi = std::move(r.mi);
            row.gmi = std::move(r.gmi);
            row.diff_std_error = r.diff_std_error;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

double parse_rate(const std::string& rate)
{
    try {
        const auto slash = rate.find('/');
        std::size_t used = 0;
        if (slash == std::string::npos) {
            const double v = std::stod(rate, &used);
            if (used != rate.size())
                throw std::invalid_argument(rate);
            return v;
        }
        const std::string a = rate.substr(0, slash), b = rate.substr(slash + 1);
        const double num = std::stod(a, &used);
        if (used != a.size())
            throw std::invalid_argument(rate);
        const double den = std::stod(b, &used);
        if (used != b.size() || den == 0.0)
            throw std::invalid_argument(rate);
        return num / den;
    } catch (const std::exception&) {
        throw std::invalid_argument("cannot parse code rate '" + rate + "'");
    }
}

GallagerDegrees degrees_for_rate(const std::string& rate)
{
    static const struct {
        double r;
        GallagerDegrees d;
    } table[] = {{1.0 / 4, {3, 4}},  {1.0 / 3, {4, 6}},  {2.0 / 5, {3, 5}},  {1.0 / 2, {3, 6}},
                 {3.0 / 5, {4, 10}}, {2.0 / 3, {3, 9}},  {3.0 / 4, {3, 12}}, {4.0 / 5, {3, 15}},
                 {5.0 / 6, {3, 18}}, {8.0 / 9, {3, 27}}, {9.0 / 10, {3, 30}}};
    const double r = parse_rate(rate);
    for (const auto& e : table)
        if (std::abs(e.r - r) < 1e-6)
            return e.d;
    throw std::invalid_argument("no regular degree pair for rate " + rate +
                                "; supply an alist file instead");
}

LdpcCode gallager_for_rate(const std::string& rate, std::size_t n, std::uint64_t seed)
{
    const auto d = degrees_for_rate(rate);
    const auto unit = static_cast<std::size_t>(d.wr / std::gcd(d.wc, d.wr));
    const std::size_t len = (n + unit - 1) / unit * unit;
    return gallager_regular(len, d.wc, d.wr, seed);
}

namespace {

CodedRow coded_point(const LabeledConstellation& lc, const std::string& system_id,
                     const LdpcCode& code, const InterleaverMap& map, const std::string& code_label,
                     const std::string& rate_nominal, const CodedSweepOptions& opt, double snr_db)
{
    const int m = lc.m();
    const SnrPoint snr = snr_point(snr_db, code.rate() * m, lc.constellation().es());
    CodedRow row;
    row.system = system_id;
    row.rate_nominal = rate_nominal;
    row.code = code_label;
    row.n = code.n();
    row.k = code.k();
    row.m = m;
    row.snr_db = snr_db;
    row.ebn0_db = snr.ebn0_db();

    McOptions mc;
    mc.samples = opt.metric_samples;
    mc.seed = opt.seed;
    mc.workers = opt.workers;
    const auto rates = rates_mc(lc, snr, mc);
    row.mi = rates.mi.value;
    row.mi_se = rates.mi.std_error;
    row.gmi = rates.gmi.value;
    row.gmi_se = rates.gmi.std_error;

    // Same symbols and noise as the rate estimates.
    auto drawn = draw_uniform_symbols(lc, opt.metric_samples, opt.seed);
    const auto y = transmit(drawn.block, snr, opt.seed, opt.workers);
    row.ber_pre = prefec_ber(maxlog_llrs(y, lc, snr, LlrConvention::one_over_zero, drawn.bits,
                                         opt.workers))
                      .ber_pre;
    row.ber_pre_exact = prefec_ber(exact_llrs(y, lc, snr, LlrConvention::one_over_zero,
                                              std::move(drawn.bits), opt.workers))
                            .ber_pre;

    CodedPointOptions cp;
    cp.target_errors = opt.target_errors;
    cp.max_frames = opt.max_frames;
    cp.workers = opt.workers;
    row.post = run_coded_point(lc, code, map, snr, opt.seed, cp);
    return row;
}

} // namespace

std::vector<CodedRow> coded_sweep(const LabeledConstellation& lc, const std::string& system_id,
                                  const LdpcCode& code, const std::string& code_label,
                                  const std::string& rate_nominal, const CodedSweepOptions& opt)
{
    check_grid(opt.snr_db);
    const auto m = static_cast<std::size_t>(lc.m());
    const auto map = make_interleaver(padded_length(code.n(), m), m,
                                      rng::hash(opt.seed, rng::Stream::interleaver, 0));
    std::vector<CodedRow> rows;
    for (double s : opt.snr_db) {
        rows.push_back(coded_point(lc, system_id, code, map, code_label, rate_nominal, opt, s));
        if (opt.stop_below > 0.0 && rows.back().post.ber_pos < opt.stop_below)
            break;
    }

    if (opt.refine_target > 0.0) {
        for (;;) {
            // First pair straddling the target; refine only when its low side is empty.
            std::size_t i = 0;
            while (i + 1 < rows.size() &&
                   !(rows[i].post.ber_pos >= opt.refine_target &&
                     rows[i + 1].post.ber_pos < opt.refine_target))
                ++i;
            if (i + 1 >= rows.size() || rows[i + 1].post.ber_pos > 0.0)
                break;
            const double gap = rows[i + 1].snr_db - rows[i].snr_db;
            if (gap <= opt.min_step_db)
                break;
            const double mid = rows[i].snr_db + gap / 2.0;
            rows.insert(rows.begin() + static_cast<std::ptrdiff_t>(i + 1),
                        coded_point(lc, system_id, code, map, code_label, rate_nominal, opt, mid));
        }
    }
    return rows;
}

double snr_for_gmi(const LabeledConstellation& lc, double eta, std::size_t samples,
                   std::uint64_t seed, std::size_t workers, double lo_db, double hi_db)
{
    if (!(eta > 0.0) || eta >= lc.m())
        throw std::invalid_argument("target rate must lie in (0, m)");
    McOptions mc;
    mc.samples = samples;
    mc.seed = seed;
    mc.workers = workers;
    auto gmi_at = [&](double db) {
        return gmi_mc(lc, snr_point(db, eta, lc.constellation().es()), mc).value;
    };
    if (gmi_at(hi_db) < eta || gmi_at(lo_db) > eta)
        throw std::runtime_error("GMI does not cross the target rate inside the search interval");
    while (hi_db - lo_db > 1e-4) {
        const double mid = 0.5 * (lo_db + hi_db);
        (gmi_at(mid) < eta ? lo_db : hi_db) = mid;
    }
    return 0.5 * (lo_db + hi_db);
}

} // namespace cm4d::harness
