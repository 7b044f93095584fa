// cm4d command line: rate sweeps, coded sweeps, threshold collapse and
// labeling optimization.

#include "cm4d/bsa.hpp"
#include "cm4d/harness.hpp"
#include "cm4d/parallel.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace cm4d;
using namespace cm4d::harness;
using nlohmann::json;

namespace {

// JSON config: top-level keys set global options, objects named after a
// subcommand set that subcommand's options.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override
    {
        return "{}";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& in) const override
    {
        json j;
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw CLI::ConfigError(std::string("config: ") + e.what());
        }
        std::vector<CLI::ConfigItem> items;
        walk(j, {}, items);
        return items;
    }

private:
    static std::string scalar(const json& v)
    {
        if (v.is_string())
            return v.get<std::string>();
        if (v.is_boolean())
            return v.get<bool>() ? "true" : "false";
        return v.dump();
    }

    static void walk(const json& j, std::vector<std::string> parents,
                     std::vector<CLI::ConfigItem>& out)
    {
        if (!j.is_object())
            throw CLI::ConfigError("config: expected a JSON object");
        for (const auto& [key, v] : j.items()) {
            if (v.is_object()) {
                auto p = parents;
                p.push_back(key);
                walk(v, p, out);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (v.is_array())
                for (const auto& e : v)
                    item.inputs.push_back(scalar(e));
            else
                item.inputs.push_back(scalar(v));
            out.push_back(std::move(item));
        }
    }
};

struct Grid {
    double from = 0.0, to = 10.0, step = 1.0;
    std::vector<double> list;

    void add(CLI::App* app)
    {
        app->add_option("--snr-from", from, "first SNR Es/N0 [dB]")->capture_default_str();
        app->add_option("--snr-to", to, "last SNR Es/N0 [dB]")->capture_default_str();
        app->add_option("--snr-step", step, "SNR step [dB]")->capture_default_str();
        app->add_option("--snr", list, "explicit SNR list [dB], overrides the range")
            ->delimiter(',');
    }

    std::vector<double> values() const
    {
        auto g = list.empty() ? snr_grid(from, to, step) : list;
        check_grid(g);
        return g;
    }
};

void emit(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot write " + path);
    out << text;
}

std::string csv_text(const CsvTable& t)
{
    std::ostringstream os;
    write_csv(os, t);
    return os.str();
}

const char* rate_help = R"(
rate-sweep CSV columns:
  system, method (gauss-hermite|monte-carlo), samples (MC samples or GH nodes),
  seed, snr_db (Es/N0), ebn0_db (with eta = m), capacity (2 log2(1 + gamma/2)),
  mi, mi_se, gmi, gmi_se, diff_se (paired standard error of mi - gmi), m,
  gmi_b1..gmi_bm (per-bit mutual informations I(B_k;Y)).
All rates in bits per 4D symbol.)";

const char* coded_help = R"(
coded-sweep CSV columns:
  system, rate (nominal), code, n, k, m, seed, snr_db, ebn0_db (eta = k/n * m),
  ber_pre (hard decisions on max-log LLRs), ber_pre_exact (exact LLRs),
  mi_norm, mi_se, gmi_norm, gmi_se (divided by m), ber_pos (information bits),
  bit_errors, frames, frame_errors, avg_iterations,
  stop (target-errors | max-frames).
LLRs follow log f(y|1)/f(y|0): positive favours bit 1.)";

const char* collapse_help = R"(
collapse CSV columns: kind, rate, system, metric, value, status.
  kind=threshold: metric value where ber_pos crosses the target, linear in the
    metric against log10(ber_pos); status ok or not-bracketed (value empty).
  kind=spread: max - min over bracketed systems per rate; status N-systems.
  kind=rank: berpre, mi, gmi ordered by spread summed over rates.)";

int run(int argc, char** argv)
{
    CLI::App app{"Four-dimensional coded modulation toolkit"};
    app.require_subcommand(1);
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON config file; command-line flags override it");
    std::size_t workers = default_workers();
    app.add_option("--workers", workers, "worker threads (default: CM4D_WORKERS or all cores)");
    std::string data_dir = default_data_dir().string();
    app.add_option("--data-dir", data_dir, "directory holding bundled constellation files")
        ->capture_default_str();
    app.footer("Exit codes: 0 success, 2 usage error or unknown system, 3 data or validation error.\n"
               "Systems: " + [] {
                   std::string s;
                   for (const auto& e : catalog())
                       s += (s.empty() ? "" : ", ") + e.id;
                   return s;
               }());

    // rate-sweep
    auto* rs = app.add_subcommand("rate-sweep", "MI, GMI and capacity against SNR");
    rs->footer(rate_help);
    std::string rs_system, rs_labeling, rs_method = "mc", rs_out, rs_plot;
    Grid rs_grid;
    std::size_t rs_samples = 100000;
    std::uint64_t rs_seed = 1;
    int rs_nodes = 20;
    bool rs_independent = false;
    rs->add_option("--system", rs_system, "catalog id or constellation CSV");
    rs->add_option("--labeling", rs_labeling, "brgc, nbc, agc, bsa or a labeling file");
    rs_grid.add(rs);
    rs->add_option("--method", rs_method, "mc or gh (product constellations only)")
        ->check(CLI::IsMember({"mc", "gh"}))
        ->capture_default_str();
    rs->add_option("--samples", rs_samples, "Monte Carlo samples per point")->capture_default_str();
    rs->add_option("--nodes", rs_nodes, "Gauss-Hermite nodes per dimension")->capture_default_str();
    rs->add_option("--seed", rs_seed, "random seed")->capture_default_str();
    rs->add_flag("--independent-noise", rs_independent,
                 "fresh samples at every SNR instead of common random numbers");
    rs->add_option("--out", rs_out, "CSV output (default stdout)");
    rs->add_option("--plot", rs_plot, "also write a gnuplot script here");

    // coded-sweep
    auto* cs = app.add_subcommand("coded-sweep", "pre-FEC BER, MI, GMI and post-FEC BER against SNR");
    cs->footer(coded_help);
    std::string cs_system, cs_labeling, cs_code = "gallager", cs_out;
    std::vector<std::string> cs_rates{"1/2"};
    Grid cs_grid;
    std::size_t cs_n = 8000, cs_target = 100, cs_max_frames = 1000, cs_metric_samples = 100000;
    std::uint64_t cs_seed = 1, cs_code_seed = 1;
    double cs_stop_below = 0.0, cs_refine = 0.0;
    cs->add_option("--system", cs_system, "catalog id or constellation CSV");
    cs->add_option("--labeling", cs_labeling, "brgc, nbc, agc, bsa or a labeling file");
    cs->add_option("--code", cs_code, "gallager (regular code per rate) or an alist file")
        ->capture_default_str();
    cs->add_option("--rates", cs_rates, "nominal code rates for gallager codes, e.g. 1/2 3/4")
        ->delimiter(',');
    cs->add_option("--n", cs_n, "approximate code length")->capture_default_str();
    cs->add_option("--code-seed", cs_code_seed, "seed of the code construction")
        ->capture_default_str();
    cs_grid.add(cs);
    cs->add_option("--target-errors", cs_target, "stop a point after this many bit errors")
        ->capture_default_str();
    cs->add_option("--max-frames", cs_max_frames, "frame cap per point")->capture_default_str();
    cs->add_option("--metric-samples", cs_metric_samples, "symbols for ber_pre, MI and GMI")
        ->capture_default_str();
    cs->add_option("--seed", cs_seed, "random seed")->capture_default_str();
    cs->add_option("--stop-below", cs_stop_below, "end the sweep once ber_pos drops below this");
    cs->add_option("--refine", cs_refine,
                   "bisect the SNR step where ber_pos falls from above this value to zero");
    cs->add_option("--out", cs_out, "CSV output (default stdout)");

    // collapse
    auto* co = app.add_subcommand("collapse", "metric thresholds at a target post-FEC BER");
    co->footer(collapse_help);
    std::vector<std::string> co_in, co_metrics{"snr", "berpre", "mi", "gmi"};
    double co_target = 1e-3;
    std::string co_out;
    co->add_option("--in", co_in, "coded-sweep CSV files");
    co->add_option("--target-berpos", co_target, "post-FEC BER target")->capture_default_str();
    co->add_option("--metric", co_metrics, "snr, berpre, mi, gmi")
        ->delimiter(',')
        ->check(CLI::IsMember({"snr", "berpre", "mi", "gmi"}));
    co->add_option("--out", co_out, "CSV output (default stdout)");

    // labeling-opt
    auto* lo = app.add_subcommand("labeling-opt", "binary switching search for a GMI-optimal labeling");
    std::string lo_const, lo_out, lo_report;
    double lo_snr = 5.0;
    std::size_t lo_restarts = 300, lo_samples = 20000, lo_candidates = 0;
    std::uint64_t lo_seed = 1;
    lo->add_option("--constellation", lo_const, "catalog name or constellation CSV");
    lo->add_option("--snr", lo_snr, "target SNR Es/N0 [dB]")->capture_default_str();
    lo->add_option("--restarts", lo_restarts, "random restarts")->capture_default_str();
    lo->add_option("--samples", lo_samples, "frozen Monte Carlo samples of the cost")
        ->capture_default_str();
    lo->add_option("--candidates", lo_candidates,
                   "restrict swaps to this many worst points per pass (0 = all)");
    lo->add_option("--seed", lo_seed, "random seed")->capture_default_str();
    lo->add_option("--out", lo_out, "labeling file to write");
    lo->add_option("--report", lo_report, "JSON run report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (workers == 0)
        workers = 1;
    const std::filesystem::path data{data_dir};

    auto need = [](const std::string& v, const char* flag) {
        if (v.empty())
            throw CLI::RequiredError(flag);
    };

    if (rs->parsed()) {
        need(rs_system, "--system");
        const auto lc = resolve_system(rs_system, rs_labeling, data);
        RateSweepOptions opt;
        opt.snr_db = rs_grid.values();
        opt.method = rs_method == "gh" ? RateSweepMethod::gauss_hermite : RateSweepMethod::monte_carlo;
        opt.samples = rs_samples;
        opt.seed = rs_seed;
        opt.workers = workers;
        opt.nodes = rs_nodes;
        opt.common_random_numbers = !rs_independent;
        std::cerr << "rate-sweep system=" << rs_system << " seed=" << rs_seed << '\n';
        emit(rs_out, csv_text(rate_table(rate_sweep(lc, rs_system, opt), rs_seed)));
        if (!rs_plot.empty())
            emit(rs_plot, rate_plot_script({rs_out.empty() ? "-" : rs_out}));
    } else if (cs->parsed()) {
        need(cs_system, "--system");
        const auto lc = resolve_system(cs_system, cs_labeling, data);
        CodedSweepOptions opt;
        opt.snr_db = cs_grid.values();
        opt.target_errors = cs_target;
        opt.max_frames = cs_max_frames;
        opt.seed = cs_seed;
        opt.workers = workers;
        opt.metric_samples = cs_metric_samples;
        opt.stop_below = cs_stop_below;
        opt.refine_target = cs_refine;
        std::cerr << "coded-sweep system=" << cs_system << " seed=" << cs_seed
                  << " code-seed=" << cs_code_seed << '\n';
        std::vector<CodedRow> rows;
        if (cs_code == "gallager") {
            for (const auto& r : cs_rates) {
                const auto d = degrees_for_rate(r);
                const auto code = gallager_for_rate(r, cs_n, cs_code_seed);
                const std::string label = "gallager-" + std::to_string(d.wc) + "-" +
                                          std::to_string(d.wr) + "-n" + std::to_string(code.n()) +
                                          "-s" + std::to_string(cs_code_seed);
                auto part = coded_sweep(lc, cs_system, code, label, r, opt);
                rows.insert(rows.end(), part.begin(), part.end());
            }
        } else {
            const auto code = [&] {
                try {
                    return from_alist(cs_code);
                } catch (const ParseError& e) {
                    throw DataError(cs_code + ": " + e.what());
                }
            }();
            const std::string nominal =
                std::to_string(code.k()) + "/" + std::to_string(code.n());
            const auto label = std::filesystem::path(cs_code).filename().string();
            rows = coded_sweep(lc, cs_system, code, label, nominal, opt);
        }
        emit(cs_out, csv_text(coded_table(rows, cs_seed)));
    } else if (co->parsed()) {
        if (co_in.empty())
            throw CLI::RequiredError("--in");
        std::vector<CodedRow> rows;
        for (const auto& f : co_in) {
            try {
                auto part = coded_rows_from_table(read_csv(std::filesystem::path(f)));
                rows.insert(rows.end(), part.begin(), part.end());
            } catch (const ParseError& e) {
                throw DataError(f + ": " + e.what());
            }
        }
        std::vector<Metric> metrics;
        for (const auto& m : co_metrics)
            metrics.push_back(parse_metric(m));
        const auto result = collapse(rows, co_target, metrics);
        for (const auto& t : result.thresholds)
            if (!t.value)
                std::cerr << "warning: " << t.system << " at rate " << t.rate
                          << " does not bracket ber_pos=" << co_target << '\n';
        emit(co_out, csv_text(collapse_table(result)));
    } else if (lo->parsed()) {
        need(lo_const, "--constellation");
        const auto c = normalize_energy(resolve_constellation(lo_const, data));
        if (!std::has_single_bit(c.size()))
            throw DataError(lo_const + " does not have a power-of-two size");
        const int m = std::countr_zero(c.size());
        const auto snr = snr_point(lo_snr, m);
        auto cost = std::make_shared<const GmiCost>(c, snr, lo_samples, lo_seed);
        BsaOptions opt;
        opt.restarts = lo_restarts;
        opt.seed = lo_seed;
        opt.workers = workers;
        opt.candidate_points = lo_candidates;
        opt.deficit = [cost](const Labeling& l) { return cost->point_deficit(l); };
        std::cerr << "labeling-opt constellation=" << lo_const << " seed=" << lo_seed << '\n';
        auto run = bsa_optimize(c, [cost](const Labeling& l) { return (*cost)(l); }, opt);

        std::ostringstream gmi;
        gmi.precision(10);
        gmi << -run.best_cost;
        const std::vector<std::string> header{
            "labeling-opt constellation=" + lo_const, "snr_db=" + format_number(lo_snr),
            "restarts=" + std::to_string(lo_restarts), "samples=" + std::to_string(lo_samples),
            "seed=" + std::to_string(lo_seed), "gmi=" + gmi.str() + " bits/symbol (frozen samples)"};
        if (!lo_out.empty())
            save_labeling(run.best_labeling, lo_out, header);
        else
            for (auto w : run.best_labeling.words())
                std::cout << format_word(w, m) << '\n';
        if (!lo_report.empty()) {
            json rep{{"constellation", lo_const},
                     {"snr_db", lo_snr},
                     {"restarts", lo_restarts},
                     {"samples", lo_samples},
                     {"seed", lo_seed},
                     {"best_cost", run.best_cost},
                     {"gmi", -run.best_cost},
                     {"final_cost_per_restart", run.trajectory}};
            emit(lo_report, rep.dump(2) + "\n");
        }
        std::cerr << "best gmi " << gmi.str() << " bits/symbol\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    try {
        return run(argc, argv);
    } catch (const UnknownSystem& e) {
        std::cerr << "error: " << e.what() << '\n' << catalog_listing() << '\n';
        return 2;
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
