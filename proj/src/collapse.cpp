#include "cm4d/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace cm4d::harness {

const char* to_string(Metric m)
{
    switch (m) {
    case Metric::snr: return "snr";
    case Metric::berpre: return "berpre";
    case Metric::mi: return "mi";
    case Metric::gmi: return "gmi";
    }
    return "?";
}

Metric parse_metric(const std::string& s)
{
    for (Metric m : {Metric::snr, Metric::berpre, Metric::mi, Metric::gmi})
        if (s == to_string(m))
            return m;
    throw std::invalid_argument("unknown metric '" + s + "' (snr, berpre, mi, gmi)");
}

double metric_value(const CodedRow& row, Metric m)
{
    switch (m) {
    case Metric::snr: return row.snr_db;
    case Metric::berpre: return row.ber_pre;
    case Metric::mi: return row.mi / row.m;
    case Metric::gmi: return row.gmi / row.m;
    }
    return 0.0;
}

std::optional<double> threshold(const std::vector<CodedRow>& rows, Metric metric, double target)
{
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        const double a = rows[i].post.ber_pos, b = rows[i + 1].post.ber_pos;
        if (!(a >= target && b < target))
            continue;
        if (a == target)
            return metric_value(rows[i], metric);
        if (b <= 0.0)
            return std::nullopt;
        const double ta = std::log10(a), tb = std::log10(b);
        const double f = (std::log10(target) - ta) / (tb - ta);
        const double xa = metric_value(rows[i], metric), xb = metric_value(rows[i + 1], metric);
        return xa + f * (xb - xa);
    }
    return std::nullopt;
}

double CollapseResult::spread(const std::string& rate, Metric m) const
{
    for (const auto& s : spreads)
        if (s.rate == rate && s.metric == m)
            return s.spread;
    throw std::out_of_range("no spread for rate " + rate + " and metric " + to_string(m));
}

double CollapseResult::total_spread(Metric m) const
{
    double t = 0.0;
    for (const auto& s : spreads)
        if (s.metric == m)
            t += s.spread;
    return t;
}

CollapseResult collapse(const std::vector<CodedRow>& rows, double target,
                        const std::vector<Metric>& metrics)
{
    if (!(target > 0.0 && target < 1.0))
        throw std::invalid_argument("target BER must lie in (0, 1)");

    // Groups in order of first appearance.
    std::vector<std::pair<std::string, std::string>> keys;
    std::map<std::pair<std::string, std::string>, std::vector<CodedRow>> groups;
    std::vector<std::string> rates;
    for (const auto& r : rows) {
        const auto key = std::make_pair(r.rate_nominal, r.system);
        if (!groups.count(key))
            keys.push_back(key);
        groups[key].push_back(r);
        if (std::find(rates.begin(), rates.end(), r.rate_nominal) == rates.end())
            rates.push_back(r.rate_nominal);
    }
    for (auto& [key, g] : groups)
        std::stable_sort(g.begin(), g.end(),
                         [](const CodedRow& a, const CodedRow& b) { return a.snr_db < b.snr_db; });

    CollapseResult out;
    for (Metric m : metrics)
        for (const auto& key : keys)
            out.thresholds.push_back({key.first, key.second, m, threshold(groups[key], m, target)});

    for (Metric m : metrics)
        for (const auto& rate : rates) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            std::size_t count = 0;
            for (const auto& t : out.thresholds)
                if (t.metric == m && t.rate == rate && t.value) {
                    lo = std::min(lo, *t.value);
                    hi = std::max(hi, *t.value);
                    ++count;
                }
            out.spreads.push_back({rate, m, count ? hi - lo : 0.0, count});
        }

    for (Metric m : metrics)
        if (m != Metric::snr)
            out.ranking.emplace_back(m, out.total_spread(m));
    std::stable_sort(out.ranking.begin(), out.ranking.end(),
                     [](const auto& a, const auto& b) { return a.second < b.second; });
    return out;
}

CsvTable collapse_table(const CollapseResult& r)
{
    CsvTable t;
    t.header = {"kind", "rate", "system", "metric", "value", "status"};
    for (const auto& e : r.thresholds)
        t.rows.push_back({"threshold", e.rate, e.system, to_string(e.metric),
                          e.value ? format_number(*e.value) : "",
                          e.value ? "ok" : "not-bracketed"});
    for (const auto& s : r.spreads)
        t.rows.push_back({"spread", s.rate, "*", to_string(s.metric), format_number(s.spread),
                          std::to_string(s.systems) + "-systems"});
    for (std::size_t i = 0; i < r.ranking.size(); ++i)
        t.rows.push_back({"rank", "*", "*", to_string(r.ranking[i].first),
                          format_number(r.ranking[i].second), std::to_string(i + 1)});
    return t;
}

} // namespace cm4d::harness
