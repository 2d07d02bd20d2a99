#pragma once

#include <cstdint>
#include <vector>

#include "btmg/bounds.hpp"

namespace btmg {

// Latin hypercube sample of n points inside bounds: per dimension the n
// equal-width strata each receive exactly one point, placed uniformly at
// random within its stratum.  Deterministic for a fixed seed.
std::vector<Eigen::VectorXd> lhs_sample(int n, const Bounds& bounds, std::uint64_t seed);

}  // namespace btmg
