#pragma once

// Binary switching algorithm: local search over label-pair swaps.

#include "cm4d/channel.hpp"
#include "cm4d/geometry.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace cm4d {

using LabelingCost = std::function<double(const Labeling&)>;

/// -GMI of a labeling, estimated on a frozen set of transmitted indices and
/// noise vectors. The same samples serve every evaluation, so the cost is a
/// deterministic function of the labeling. The constellation is rescaled to
/// the energy of `snr`.
class GmiCost {
public:
    GmiCost(const Constellation& c, const SnrPoint& snr, std::size_t samples, std::uint64_t seed);

    double operator()(const Labeling& l) const;

    /// Per point: average over samples sent from that point of m minus the
    /// sample's GMI contribution. Large values mark badly labeled points.
    std::vector<double> point_deficit(const Labeling& l) const;

    std::size_t points() const noexcept { return M_; }
    std::size_t samples() const noexcept { return N_; }

private:
    std::size_t M_;
    std::size_t N_;
    std::vector<std::size_t> sent_;
    std::vector<double> posterior_; // N x M, rows sum to one
};

LabelingCost gmi_cost(const Constellation& c, const SnrPoint& snr, std::size_t samples,
                      std::uint64_t seed);

struct BsaOptions {
    std::size_t restarts = 300;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    /// When positive, each pass only tries swaps involving one of this many
    /// points with the largest deficit. Needs `deficit`. Off by default.
    std::size_t candidate_points = 0;
    std::function<std::vector<double>(const Labeling&)> deficit;
};

struct BsaRestart {
    Labeling initial;
    Labeling final;
    /// Cost of the initial labeling followed by the cost after each accepted swap.
    std::vector<double> accepted_costs;
};

struct BsaRun {
    Labeling best_labeling;
    double best_cost = 0.0;
    std::size_t restarts = 0;
    std::optional<SnrPoint> target_snr;
    std::uint64_t seed = 0;
    std::vector<double> trajectory; // final cost per restart
    std::vector<BsaRestart> details;
};

/// Random initial labeling per restart, then best-improvement passes over all
/// M(M-1)/2 swaps until no swap strictly lowers the cost. Ties go to the
/// lowest pair index. Deterministic in seed and independent of workers.
BsaRun bsa_optimize(const Constellation& c, const LabelingCost& cost, const BsaOptions& opt);

/// Initial labeling used by restart r.
Labeling bsa_initial_labeling(std::size_t M, std::uint64_t seed, std::size_t restart);

} // namespace cm4d
