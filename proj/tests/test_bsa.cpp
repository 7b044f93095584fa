#include "cm4d/bsa.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace cm4d;

namespace {

Constellation pam4_line()
{
    return Constellation("pam4", {Point4{-3, 0, 0, 0}, Point4{-1, 0, 0, 0}, Point4{1, 0, 0, 0},
                                  Point4{3, 0, 0, 0}});
}

Constellation pm_qpsk()
{
    const auto p = pam_points(2);
    return normalize_energy(product_constellation({p, p, p, p}, "pm-qpsk"));
}

} // namespace

TEST_CASE("constant cost leaves the initial labeling alone")
{
    const auto c = pm_qpsk();
    BsaOptions opt;
    opt.restarts = 3;
    const auto run = bsa_optimize(c, [](const Labeling&) { return 1.0; }, opt);
    for (std::size_t r = 0; r < 3; ++r) {
        CHECK(run.details[r].final == run.details[r].initial);
        CHECK(run.details[r].initial == bsa_initial_labeling(16, opt.seed, r));
        CHECK(run.details[r].accepted_costs.size() == 1);
    }
    CHECK(run.best_cost == 1.0);
}

TEST_CASE("4-PAM: search reaches the exhaustive optimum")
{
    const auto c = pam4_line();
    const auto snr = snr_point(10.0, 2, c.es());
    const GmiCost cost(c, snr, 20000, 3);

    std::vector<std::uint32_t> w{0, 1, 2, 3};
    double best = INFINITY;
    do {
        best = std::min(best, cost(Labeling(w)));
    } while (std::next_permutation(w.begin(), w.end()));

    BsaOptions opt;
    opt.restarts = 10;
    const auto run = bsa_optimize(c, [&](const Labeling& l) { return cost(l); }, opt);
    CHECK(std::abs(run.best_cost - best) <= 1e-3);
    CHECK(std::abs(cost(run.best_labeling) - cost(brgc(2))) <= 1e-3);
}

TEST_CASE("accepted swaps strictly lower the cost")
{
    const auto c = normalize_energy(so_pm_qpsk());
    const auto cost = gmi_cost(c, snr_point(5.0, 4), 4000, 2);
    BsaOptions opt;
    opt.restarts = 6;
    const auto run = bsa_optimize(c, cost, opt);
    double best = INFINITY;
    for (const auto& r : run.details) {
        for (std::size_t i = 1; i < r.accepted_costs.size(); ++i)
            CHECK(r.accepted_costs[i] < r.accepted_costs[i - 1]);
        CHECK(cost(r.final) <= cost(r.initial));
        best = std::min(best, r.accepted_costs.back());
    }
    CHECK(run.best_cost == best);
    CHECK(*std::min_element(run.trajectory.begin(), run.trajectory.end()) == run.best_cost);
}

TEST_CASE("GMI cost properties")
{
    const auto c = pm_qpsk();
    const GmiCost cost(c, snr_point(3.0, 4), 5000, 9);
    const auto gray = product_labeling({brgc(1), brgc(1), brgc(1), brgc(1)});
    CHECK(cost(gray) == cost(gray));
    CHECK(cost(gray) >= -4.0);

    for (std::size_t r = 0; r < 100; ++r) {
        const auto l = bsa_initial_labeling(16, 77, r);
        CHECK(cost(gray) <= cost(l));
        CHECK(cost(l) >= -4.0);
    }

    // XOR masks and bit permutations leave the cost unchanged.
    const auto l = bsa_initial_labeling(16, 5, 0);
    std::vector<std::uint32_t> masked, permuted;
    for (auto w : l.words()) {
        masked.push_back(w ^ 0b1010u);
        // Bits (b3 b2 b1 b0) -> (b1 b3 b0 b2).
        const std::uint32_t b3 = w >> 3 & 1, b2 = w >> 2 & 1, b1 = w >> 1 & 1, b0 = w & 1;
        permuted.push_back(b1 << 3 | b3 << 2 | b0 << 1 | b2);
    }
    CHECK(cost(Labeling(masked)) == cost(l));
    CHECK(cost(Labeling(permuted)) == doctest::Approx(cost(l)).epsilon(1e-12));
}

TEST_CASE("more restarts never hurt and workers do not matter")
{
    const auto c = normalize_energy(so_pm_qpsk());
    const auto cost = gmi_cost(c, snr_point(5.0, 4), 3000, 4);
    BsaOptions opt;
    opt.restarts = 1;
    const auto one = bsa_optimize(c, cost, opt);
    opt.restarts = 12;
    const auto many = bsa_optimize(c, cost, opt);
    CHECK(many.best_cost <= one.best_cost);
    opt.workers = 4;
    const auto par = bsa_optimize(c, cost, opt);
    CHECK(par.best_cost == many.best_cost);
    CHECK(par.best_labeling == many.best_labeling);
    CHECK(par.trajectory == many.trajectory);
}

TEST_CASE("candidate cap restricts the neighbourhood")
{
    const auto c = normalize_energy(d4_subset(32));
    const auto snr = snr_point(8.0, 5);
    auto gc = std::make_shared<const GmiCost>(c, snr, 1000, 1);
    BsaOptions opt;
    opt.restarts = 1;
    opt.candidate_points = 8;
    opt.deficit = [gc](const Labeling& l) { return gc->point_deficit(l); };
    const auto run = bsa_optimize(c, [gc](const Labeling& l) { return (*gc)(l); }, opt);
    const auto& r = run.details.front();
    CHECK(r.accepted_costs.back() < r.accepted_costs.front());
    CHECK(gc->point_deficit(r.final).size() == 32);
}
