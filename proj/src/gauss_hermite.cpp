#include "cm4d/rates.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cm4d {

// Newton iteration on the normalized Hermite recurrence with the usual
// asymptotic initial guesses.
GaussHermiteRule gauss_hermite(int n)
{
    if (n < 1 || n > 200)
        throw std::invalid_argument("Gauss-Hermite order must be in [1, 200]");
    const double pim4 = std::pow(std::numbers::pi, -0.25);
    GaussHermiteRule r;
    r.nodes.assign(n, 0.0);
    r.weights.assign(n, 0.0);
    const int half = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < half; ++i) {
        if (i == 0)
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
        else if (i == 1)
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        else if (i == 2)
            z = 1.86 * z - 0.86 * r.nodes[0];
        else if (i == 3)
            z = 1.91 * z - 0.91 * r.nodes[1];
        else
            z = 2.0 * z - r.nodes[i - 2];

        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = pim4, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z)))
                break;
        }
        r.nodes[i] = z;
        r.nodes[n - 1 - i] = -z;
        r.weights[i] = 2.0 / (pp * pp);
        r.weights[n - 1 - i] = r.weights[i];
    }
    // Ascending node order.
    for (int i = 0, j = n - 1; i < j; ++i, --j) {
        std::swap(r.nodes[i], r.nodes[j]);
        std::swap(r.weights[i], r.weights[j]);
    }
    return r;
}

} // namespace cm4d
