#include "cm4d/bsa.hpp"

#include "cm4d/parallel.hpp"
#include "cm4d/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace cm4d {

GmiCost::GmiCost(const Constellation& c, const SnrPoint& snr, std::size_t samples,
                 std::uint64_t seed)
    : M_(c.size()), N_(samples)
{
    if (!std::has_single_bit(M_))
        throw std::invalid_argument("GMI cost needs a power-of-two constellation");
    if (samples == 0)
        throw std::invalid_argument("GMI cost needs samples");
    const double scale = std::sqrt(snr.es / c.es());
    std::vector<Point4> pts(c.points().begin(), c.points().end());
    for (auto& p : pts)
        for (double& x : p)
            x *= scale;

    const double inv_n0 = 1.0 / snr.n0;
    sent_.resize(N_);
    posterior_.resize(N_ * M_);
    std::vector<double> metric(M_);
    for (std::size_t n = 0; n < N_; ++n) {
        const std::size_t t = draw_index(seed, n, M_);
        const Point4 z = noise_sample(seed, n, snr.n0);
        const Point4 y{pts[t][0] + z[0], pts[t][1] + z[1], pts[t][2] + z[2], pts[t][3] + z[3]};
        sent_[n] = t;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < M_; ++i) {
            metric[i] = -squared_distance(y, pts[i]) * inv_n0;
            mx = std::max(mx, metric[i]);
        }
        double s = 0.0;
        double* row = &posterior_[n * M_];
        for (std::size_t i = 0; i < M_; ++i) {
            row[i] = std::exp(metric[i] - mx);
            s += row[i];
        }
        for (std::size_t i = 0; i < M_; ++i)
            row[i] /= s;
    }
}

namespace {

// Per bit position, indicator of bit value 1 and of bit value 0 per point.
std::vector<double> bit_masks(const Labeling& l)
{
    const std::size_t M = l.size();
    const int m = l.m();
    std::vector<double> masks(2 * static_cast<std::size_t>(m) * M);
    for (int k = 0; k < m; ++k)
        for (std::size_t i = 0; i < M; ++i) {
            const int b = l.bit(i, k);
            masks[(2 * k + 1) * M + i] = b;
            masks[(2 * k) * M + i] = 1 - b;
        }
    return masks;
}

} // namespace

double GmiCost::operator()(const Labeling& l) const
{
    if (l.size() != M_)
        throw std::invalid_argument("labeling size does not match the cost");
    const int m = l.m();
    const auto masks = bit_masks(l);
    double total = 0.0;
    for (std::size_t n = 0; n < N_; ++n) {
        const double* row = &posterior_[n * M_];
        const std::uint32_t w = l.word(sent_[n]);
        double sample = 0.0;
        for (int k = 0; k < m; ++k) {
            const int b = (w >> (m - 1 - k)) & 1u;
            const double* mask = &masks[(2 * k + b) * M_];
            double s = 0.0;
            for (std::size_t i = 0; i < M_; ++i)
                s += row[i] * mask[i];
            sample += std::log2(2.0 * s);
        }
        total += sample;
    }
    return -total / static_cast<double>(N_);
}

std::vector<double> GmiCost::point_deficit(const Labeling& l) const
{
    const int m = l.m();
    const auto masks = bit_masks(l);
    std::vector<double> sum(M_, 0.0);
    std::vector<std::size_t> count(M_, 0);
    for (std::size_t n = 0; n < N_; ++n) {
        const double* row = &posterior_[n * M_];
        const std::uint32_t w = l.word(sent_[n]);
        double sample = 0.0;
        for (int k = 0; k < m; ++k) {
            const int b = (w >> (m - 1 - k)) & 1u;
            const double* mask = &masks[(2 * k + b) * M_];
            double s = 0.0;
            for (std::size_t i = 0; i < M_; ++i)
                s += row[i] * mask[i];
            sample += std::log2(2.0 * s);
        }
        sum[sent_[n]] += m - sample;
        ++count[sent_[n]];
    }
    for (std::size_t i = 0; i < M_; ++i)
        sum[i] = count[i] ? sum[i] / static_cast<double>(count[i]) : 0.0;
    return sum;
}

LabelingCost gmi_cost(const Constellation& c, const SnrPoint& snr, std::size_t samples,
                      std::uint64_t seed)
{
    auto cost = std::make_shared<const GmiCost>(c, snr, samples, seed);
    return [cost](const Labeling& l) { return (*cost)(l); };
}

Labeling bsa_initial_labeling(std::size_t M, std::uint64_t seed, std::size_t restart)
{
    rng::SplitMix gen(rng::hash(seed, rng::Stream::labeling, restart), rng::Stream::labeling);
    const auto perm = rng::random_permutation(M, gen);
    std::vector<std::uint32_t> words(perm.begin(), perm.end());
    return Labeling(std::move(words));
}

namespace {

BsaRestart run_restart(std::size_t M, const LabelingCost& cost, const BsaOptions& opt,
                       std::size_t r)
{
    const Labeling initial = bsa_initial_labeling(M, opt.seed, r);
    std::vector<std::uint32_t> words(initial.words().begin(), initial.words().end());
    double current = cost(initial);
    BsaRestart out{initial, initial, {current}};

    for (;;) {
        std::vector<std::uint8_t> candidate(M, 1);
        if (opt.candidate_points > 0 && opt.deficit && opt.candidate_points < M) {
            const auto deficit = opt.deficit(Labeling(words));
            std::vector<std::size_t> order(M);
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return deficit[a] > deficit[b]; });
            std::fill(candidate.begin(), candidate.end(), 0);
            for (std::size_t t = 0; t < opt.candidate_points; ++t)
                candidate[order[t]] = 1;
        }

        double best = current;
        std::size_t bi = M, bj = M;
        for (std::size_t i = 0; i < M; ++i)
            for (std::size_t j = i + 1; j < M; ++j) {
                if (!candidate[i] && !candidate[j])
                    continue;
                std::swap(words[i], words[j]);
                const double c = cost(Labeling(words));
                std::swap(words[i], words[j]);
                if (c < best) {
                    best = c;
                    bi = i;
                    bj = j;
                }
            }
        if (bi == M)
            break;
        std::swap(words[bi], words[bj]);
        current = best;
        out.accepted_costs.push_back(current);
    }
    out.final = Labeling(std::move(words));
    return out;
}

} // namespace

BsaRun bsa_optimize(const Constellation& c, const LabelingCost& cost, const BsaOptions& opt)
{
    if (opt.restarts == 0)
        throw std::invalid_argument("BSA needs at least one restart");
    const std::size_t M = c.size();
    std::vector<std::optional<BsaRestart>> results(opt.restarts);
    parallel_for(opt.restarts, opt.workers,
                 [&](std::size_t r) { results[r] = run_restart(M, cost, opt, r); });

    BsaRun run{results[0]->final, results[0]->accepted_costs.back(), opt.restarts, std::nullopt,
               opt.seed, {}, {}};
    for (std::size_t r = 0; r < opt.restarts; ++r) {
        const double final_cost = results[r]->accepted_costs.back();
        run.trajectory.push_back(final_cost);
        if (final_cost < run.best_cost) {
            run.best_cost = final_cost;
            run.best_labeling = results[r]->final;
        }
        run.details.push_back(std::move(*results[r]));
    }
    return run;
}

} // namespace cm4d
