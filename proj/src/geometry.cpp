#include "cm4d/geometry.hpp"

#include "cm4d/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>

namespace cm4d {

namespace {

bool is_power_of_two(std::size_t v) { return v >= 1 && std::has_single_bit(v); }

bool canonical_less(const Point4& a, const Point4& b)
{
    const double na = squared_norm(a), nb = squared_norm(b);
    if (na != nb)
        return na < nb;
    return a < b;
}

double mean_energy(std::span<const Point4> pts)
{
    double s = 0.0;
    for (const auto& p : pts)
        s += squared_norm(p);
    return s / static_cast<double>(pts.size());
}

} // namespace

Constellation::Constellation(std::string name, std::vector<Point4> points)
    : name_(std::move(name)), points_(std::move(points))
{
    if (points_.size() < 2)
        throw std::invalid_argument("constellation needs at least two points");
    for (const auto& p : points_)
        for (double x : p)
            if (!std::isfinite(x))
                throw std::invalid_argument("constellation has a non-finite coordinate");

    std::vector<Point4> sorted = points_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::invalid_argument("constellation '" + name_ + "' has duplicate points");

    es_ = mean_energy(points_);
}

Constellation Constellation::renamed(std::string name) const
{
    Constellation c = *this;
    c.name_ = std::move(name);
    return c;
}

Labeling::Labeling(std::vector<std::uint32_t> words) : words_(std::move(words))
{
    const std::size_t M = words_.size();
    if (M < 2 || !is_power_of_two(M))
        throw std::invalid_argument("labeling size must be a power of two >= 2");
    m_ = std::countr_zero(M);
    inverse_.assign(M, M);
    for (std::size_t i = 0; i < M; ++i) {
        const std::uint32_t w = words_[i];
        if (w >= M || inverse_[w] != M)
            throw std::invalid_argument("labeling words must be a permutation of 0..M-1");
        inverse_[w] = i;
    }
}

LabeledConstellation::LabeledConstellation(Constellation constellation, Labeling labeling)
    : constellation_(std::move(constellation)), labeling_(std::move(labeling))
{
    if (constellation_.size() != labeling_.size())
        throw std::invalid_argument("labeling size does not match constellation size");
    const int m = labeling_.m();
    subsets_.resize(2 * static_cast<std::size_t>(m));
    for (std::size_t i = 0; i < constellation_.size(); ++i)
        for (int k = 0; k < m; ++k)
            subsets_[2 * k + labeling_.bit(i, k)].push_back(i);
}

std::optional<ProductStructure> product_structure(const Constellation& c)
{
    ProductStructure ps;
    std::size_t combos = 1;
    for (int d = 0; d < 4; ++d) {
        auto& lv = ps.levels[d];
        for (const auto& p : c.points())
            lv.push_back(p[d]);
        std::sort(lv.begin(), lv.end());
        lv.erase(std::unique(lv.begin(), lv.end()), lv.end());
        combos *= lv.size();
        if (combos > c.size())
            return std::nullopt;
    }
    // Distinct points and M == product of level counts implies the full product.
    if (combos != c.size())
        return std::nullopt;
    ps.level_index.reserve(c.size());
    for (const auto& p : c.points()) {
        std::array<std::uint16_t, 4> idx{};
        for (int d = 0; d < 4; ++d) {
            const auto& lv = ps.levels[d];
            idx[d] = static_cast<std::uint16_t>(
                std::lower_bound(lv.begin(), lv.end(), p[d]) - lv.begin());
        }
        ps.level_index.push_back(idx);
    }
    return ps;
}

std::optional<Factorization> factorize(const LabeledConstellation& lc)
{
    auto ps = product_structure(lc.constellation());
    if (!ps)
        return std::nullopt;
    Factorization f{std::move(*ps), {}};
    const auto& C = lc.constellation();
    for (int k = 0; k < lc.m(); ++k) {
        bool found = false;
        for (int d = 0; d < 4 && !found; ++d) {
            const std::size_t L = f.product.levels[d].size();
            if (L < 2)
                continue;
            std::vector<int> val(L, -1);
            bool ok = true;
            for (std::size_t i = 0; i < C.size() && ok; ++i) {
                const int li = f.product.level_index[i][d];
                const int b = lc.labeling().bit(i, k);
                if (val[li] < 0)
                    val[li] = b;
                else if (val[li] != b)
                    ok = false;
            }
            if (ok) {
                BitFactor bf;
                bf.dim = d;
                bf.bit_of_level.assign(val.begin(), val.end());
                f.bits.push_back(std::move(bf));
                found = true;
            }
        }
        if (!found)
            return std::nullopt;
    }
    return f;
}

std::vector<double> pam_points(int levels)
{
    if (levels < 2 || !is_power_of_two(static_cast<std::size_t>(levels)))
        throw std::invalid_argument("PAM size must be a power of two >= 2");
    std::vector<double> v(static_cast<std::size_t>(levels));
    for (int i = 0; i < levels; ++i)
        v[i] = static_cast<double>(2 * i - (levels - 1));
    return v;
}

Constellation product_constellation(const std::array<std::vector<double>, 4>& per_dim,
                                    std::string name)
{
    for (const auto& v : per_dim) {
        if (v.empty())
            throw std::invalid_argument("product factor is empty");
        auto s = v;
        std::sort(s.begin(), s.end());
        if (std::adjacent_find(s.begin(), s.end()) != s.end())
            throw std::invalid_argument("product factor has duplicate entries");
    }
    std::vector<Point4> pts;
    pts.reserve(per_dim[0].size() * per_dim[1].size() * per_dim[2].size() * per_dim[3].size());
    for (double a : per_dim[0])
        for (double b : per_dim[1])
            for (double c : per_dim[2])
                for (double d : per_dim[3])
                    pts.push_back({a, b, c, d});
    return Constellation(std::move(name), std::move(pts));
}

namespace {

using IntPoint = std::array<int, 4>;

// Odd-sum integer points with squared norm <= bound, kept in integers until the
// final conversion.
std::vector<IntPoint> odd_coset_points(int bound)
{
    const int r = static_cast<int>(std::floor(std::sqrt(static_cast<double>(bound))));
    std::vector<IntPoint> out;
    for (int a = -r; a <= r; ++a)
        for (int b = -r; b <= r; ++b)
            for (int c = -r; c <= r; ++c)
                for (int d = -r; d <= r; ++d) {
                    const int n = a * a + b * b + c * c + d * d;
                    if (n <= bound && ((a + b + c + d) & 1))
                        out.push_back({a, b, c, d});
                }
    std::sort(out.begin(), out.end(), [](const IntPoint& x, const IntPoint& y) {
        const int nx = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
        const int ny = y[0] * y[0] + y[1] * y[1] + y[2] * y[2] + y[3] * y[3];
        return nx != ny ? nx < ny : x < y;
    });
    return out;
}

std::vector<Point4> to_real(std::span<const IntPoint> pts)
{
    std::vector<Point4> out;
    out.reserve(pts.size());
    for (const auto& p : pts)
        out.push_back({double(p[0]), double(p[1]), double(p[2]), double(p[3])});
    return out;
}

} // namespace

Constellation d4_odd_shells(int max_norm_sq)
{
    if (max_norm_sq < 1)
        throw std::invalid_argument("max_norm_sq must be >= 1");
    const auto pts = odd_coset_points(max_norm_sq);
    return Constellation("d4-odd-shells-" + std::to_string(max_norm_sq), to_real(pts));
}

Constellation d4_subset(std::size_t M)
{
    if (M < 2)
        throw std::invalid_argument("d4_subset needs M >= 2");
    int bound = 1;
    std::vector<IntPoint> pts;
    for (;; bound += 2) {
        pts = odd_coset_points(bound);
        if (pts.size() >= M)
            break;
    }
    pts.resize(M);
    return Constellation("d4-subset-" + std::to_string(M), to_real(pts));
}

Constellation ps_qpsk() { return d4_odd_shells(1).renamed("ps-qpsk"); }

Constellation so_pm_qpsk()
{
    const double alpha = (std::sqrt(5.0) - 1.0) / 2.0;
    std::vector<Point4> pts;
    for (int mask = 0; mask < 16; ++mask) {
        Point4 p{};
        int minus = 0;
        for (int d = 0; d < 4; ++d) {
            const bool neg = (mask >> (3 - d)) & 1;
            p[d] = neg ? -1.0 : 1.0;
            minus += neg;
        }
        if (minus % 2)
            for (double& x : p)
                x *= alpha;
        pts.push_back(p);
    }
    std::sort(pts.begin(), pts.end(), canonical_less);
    return Constellation("so-pm-qpsk", std::move(pts));
}

Constellation normalize_energy(const Constellation& c)
{
    if (!(c.es() > 0.0))
        throw std::invalid_argument("cannot normalize a zero-energy constellation");
    if (c.es() == 1.0)
        return c;
    const double scale = 1.0 / std::sqrt(c.es());
    std::vector<Point4> pts(c.points().begin(), c.points().end());
    for (auto& p : pts)
        for (double& x : p)
            x *= scale;
    return Constellation(c.name(), std::move(pts));
}

double min_sq_distance(const Constellation& c)
{
    double best = std::numeric_limits<double>::infinity();
    const auto pts = c.points();
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            best = std::min(best, squared_distance(pts[i], pts[j]));
    return best;
}

double asymptotic_gain_db(const Constellation& c, const Constellation& reference, int bits_c,
                          int bits_ref)
{
    const double d_c = min_sq_distance(c);
    const double d_ref = min_sq_distance(reference);
    if (!(d_c > 0.0) || !(d_ref > 0.0))
        throw std::invalid_argument("minimum distance must be positive");
    const double eff_c = d_c / (c.es() / bits_c);
    const double eff_ref = d_ref / (reference.es() / bits_ref);
    return 10.0 * std::log10(eff_c / eff_ref);
}

Constellation optimize_packing(std::size_t M, std::uint64_t seed, int iterations)
{
    if (M < 2)
        throw std::invalid_argument("optimize_packing needs M >= 2");
    constexpr int restarts = 8;
    const double Md = static_cast<double>(M);

    auto project = [&](std::vector<Point4>& x) {
        Point4 mean{};
        for (const auto& p : x)
            for (int d = 0; d < 4; ++d)
                mean[d] += p[d] / Md;
        for (auto& p : x)
            for (int d = 0; d < 4; ++d)
                p[d] -= mean[d];
        const double s = 1.0 / std::sqrt(mean_energy(x));
        for (auto& p : x)
            for (double& v : p)
                v *= s;
    };
    auto dmin = [&](const std::vector<Point4>& x) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < M; ++i)
            for (std::size_t j = i + 1; j < M; ++j)
                best = std::min(best, squared_distance(x[i], x[j]));
        return best;
    };

    std::vector<Point4> best_x;
    double best_d = -1.0;
    for (int r = 0; r < restarts; ++r) {
        rng::SplitMix gen(rng::hash(seed, rng::Stream::packing, static_cast<std::uint64_t>(r)),
                          rng::Stream::packing);
        std::vector<Point4> x(M);
        for (auto& p : x)
            for (double& v : p)
                v = gen.normal();
        project(x);

        std::vector<Point4> grad(M);
        std::vector<Point4> local_best = x;
        double local_d = dmin(x);
        for (int it = 0; it < iterations; ++it) {
            const double frac = static_cast<double>(it) / std::max(1, iterations);
            // Riesz exponent grows so the energy concentrates on the closest pairs.
            const double power = 2.0 + 60.0 * frac;
            const double step = 0.05 * (1.0 - frac) + 1e-4;
            const double dref = dmin(x);
            for (auto& g : grad)
                g = {};
            for (std::size_t i = 0; i < M; ++i)
                for (std::size_t j = i + 1; j < M; ++j) {
                    const double d2 = squared_distance(x[i], x[j]);
                    const double w = std::pow(dref / d2, power) / d2;
                    for (int d = 0; d < 4; ++d) {
                        const double f = w * (x[i][d] - x[j][d]);
                        grad[i][d] += f;
                        grad[j][d] -= f;
                    }
                }
            double gmax = 0.0;
            for (const auto& g : grad)
                gmax = std::max(gmax, std::sqrt(squared_norm(g)));
            if (!(gmax > 0.0))
                break;
            for (std::size_t i = 0; i < M; ++i)
                for (int d = 0; d < 4; ++d)
                    x[i][d] += step * grad[i][d] / gmax;
            project(x);
            const double dm = dmin(x);
            if (dm > local_d) {
                local_d = dm;
                local_best = x;
            }
        }
        if (local_d > best_d) {
            best_d = local_d;
            best_x = local_best;
        }
    }
    std::sort(best_x.begin(), best_x.end(), canonical_less);
    return Constellation("packing-" + std::to_string(M), std::move(best_x));
}

Labeling brgc(int m)
{
    if (m < 1 || m > 24)
        throw std::invalid_argument("brgc needs 1 <= m <= 24");
    std::vector<std::uint32_t> w{0, 1};
    for (int bits = 1; bits < m; ++bits) {
        const std::size_t n = w.size();
        for (std::size_t i = n; i-- > 0;)
            w.push_back(w[i] | (1u << bits));
    }
    return Labeling(std::move(w));
}

Labeling nbc(int m)
{
    if (m < 1 || m > 24)
        throw std::invalid_argument("nbc needs 1 <= m <= 24");
    std::vector<std::uint32_t> w(std::size_t{1} << m);
    for (std::size_t i = 0; i < w.size(); ++i)
        w[i] = static_cast<std::uint32_t>(i);
    return Labeling(std::move(w));
}

Labeling agc2() { return Labeling({0b00, 0b11, 0b01, 0b10}); }

Labeling product_labeling(const std::vector<Labeling>& per_dim)
{
    if (per_dim.empty())
        throw std::invalid_argument("product_labeling needs at least one factor");
    std::vector<std::uint32_t> words{0};
    int total_bits = 0;
    for (const auto& l : per_dim) {
        std::vector<std::uint32_t> next;
        next.reserve(words.size() * l.size());
        for (std::uint32_t prefix : words)
            for (std::uint32_t w : l.words())
                next.push_back((prefix << l.m()) | w);
        words = std::move(next);
        total_bits += l.m();
        if (total_bits > 24)
            throw std::invalid_argument("product labeling too wide");
    }
    return Labeling(std::move(words));
}

Labeling orthant_labeling(const Constellation& c)
{
    if (c.size() != 16)
        throw std::invalid_argument("orthant labeling needs 16 points");
    std::vector<std::uint32_t> w;
    for (const auto& p : c.points()) {
        std::uint32_t word = 0;
        for (int d = 0; d < 4; ++d) {
            if (p[d] == 0.0)
                throw std::invalid_argument("orthant labeling needs nonzero coordinates");
            word = (word << 1) | (p[d] > 0.0 ? 1u : 0u);
        }
        w.push_back(word);
    }
    return Labeling(std::move(w));
}

Labeling ps_qpsk_labeling(const Constellation& c)
{
    if (c.size() != 8)
        throw std::invalid_argument("PS-QPSK labeling needs 8 points");
    static constexpr std::uint32_t gray2[4] = {0, 1, 3, 2};
    std::vector<std::uint32_t> w;
    for (const auto& p : c.points()) {
        int axis = -1;
        for (int d = 0; d < 4; ++d)
            if (p[d] != 0.0) {
                if (axis >= 0)
                    throw std::invalid_argument("PS-QPSK points have one nonzero coordinate");
                axis = d;
            }
        if (axis < 0)
            throw std::invalid_argument("PS-QPSK points have one nonzero coordinate");
        w.push_back(((p[axis] > 0.0 ? 1u : 0u) << 2) | gray2[axis]);
    }
    return Labeling(std::move(w));
}

int adjacent_hamming_sum(const Labeling& l)
{
    int s = 0;
    for (std::size_t i = 0; i + 1 < l.size(); ++i)
        s += std::popcount(l.word(i) ^ l.word(i + 1));
    return s;
}

std::string format_word(std::uint32_t word, int m)
{
    std::string s(static_cast<std::size_t>(m), '0');
    for (int k = 0; k < m; ++k)
        if ((word >> (m - 1 - k)) & 1u)
            s[k] = '1';
    return s;
}

} // namespace cm4d
