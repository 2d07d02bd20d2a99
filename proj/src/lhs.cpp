#include "btmg/lhs.hpp"

#include <numeric>
#include <stdexcept>

#include "btmg/rng.hpp"

namespace btmg {

std::vector<Eigen::VectorXd> lhs_sample(int n, const Bounds& bounds, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("lhs_sample: n must be >= 1");
    bounds.validate();
    const int d = bounds.dim();
    Rng rng(seed);

    std::vector<Eigen::VectorXd> points(static_cast<std::size_t>(n), Eigen::VectorXd(d));
    std::vector<int> strata(static_cast<std::size_t>(n));
    for (int dim = 0; dim < d; ++dim) {
        std::iota(strata.begin(), strata.end(), 0);
        rng.shuffle(strata);
        const double lo = bounds.lower[dim];
        const double step = (bounds.upper[dim] - bounds.lower[dim]) / n;
        for (int i = 0; i < n; ++i)
            points[static_cast<std::size_t>(i)][dim] = lo + (strata[static_cast<std::size_t>(i)] + rng.uniform01()) * step;
    }
    return points;
}

}  // namespace btmg
