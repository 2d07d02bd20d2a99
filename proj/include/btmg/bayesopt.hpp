#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "btmg/bounds.hpp"
#include "btmg/gp.hpp"
#include "btmg/types.hpp"

namespace btmg {

struct BOConfig {
    int n_init = 20;        // LHS initial design size
    int t_max = 120;        // total evaluations (history length)
    int refit_every = 10;   // refit GP hyperparameters every this many evaluations
    int acq_samples = 512;  // uniform probes per acquisition round
    int acq_refine = 8;     // gradient refinements from the best probes
    double ei_jitter = 0.01;  // exploration jitter as a fraction of the reward range
    std::uint64_t seed = 0;

    void validate() const;
};

// Expected improvement for maximization; variance enters as sigma^2.
double expected_improvement(double mean, double variance, double best);

struct BOResult {
    std::vector<EvalRecord> history;  // length t_max, in evaluation order
    PolicyParams best_params;
    double best_reward = 0.0;
    int best_index = 0;  // earliest index attaining the max reward
};

// Sequential Bayesian-optimization loop over theta_bounds: LHS design, then
// EI-driven proposals from a GP refit on all rewards so far.  Deterministic
// under cfg.seed for a deterministic objective.
BOResult bo_learn(const std::function<EvalRecord(const PolicyParams&)>& objective,
                  const Bounds& theta_bounds, const BOConfig& cfg);

}  // namespace btmg
