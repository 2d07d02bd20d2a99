#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "btmg/bounds.hpp"
#include "btmg/gp.hpp"
#include "btmg/svm.hpp"
#include "btmg/types.hpp"

namespace btmg {

struct PerfOptions {
    double mu_factor = 0.25;  // infeasibility penalty as a fraction of the reward range
    double svm_c = 10.0;
    double svm_gamma = 0.0;  // <= 0 selects the 1/dim default
    GPFitOptions gp;
    SVMOptions svm;
};

// Joint reward/feasibility surrogate over the concatenated normalized input
// (v, theta): a GP for the reward and a class-weighted SVM for feasibility.
struct PerfModel {
    TaskId task = TaskId::obstacle;
    GPModel j_hat;
    SVMModel f_hat;
    double mu = 0.0;
    double r_min = 0.0, r_max = 0.0;
    Bounds var_bounds;
    Bounds theta_bounds;
    bool constant_classifier = false;  // one feasibility class in the history

    // Best training pairs, kept as warm starts for query().
    std::vector<TaskVariation> train_variations;
    std::vector<PolicyParams> train_best;
    std::vector<double> train_best_rewards;

    Eigen::VectorXd joint_input(const TaskVariation& v, const PolicyParams& theta) const;
};

PerfModel train_perf(const TrainingData& data, const Bounds& var_bounds,
                     const Bounds& theta_bounds, std::uint64_t seed,
                     const PerfOptions& opts = {});

// Surrogate reward r_hat - (1 - f_hat) * mu.  The hard form uses the binary
// classifier; the soft form swaps in the sigmoid feasibility and returns the
// analytic gradient with respect to raw theta.
double surrogate_reward_hard(const PerfModel& m, const TaskVariation& v, const PolicyParams& theta);
std::pair<double, Eigen::VectorXd> surrogate_reward_soft(const PerfModel& m,
                                                         const TaskVariation& v,
                                                         const PolicyParams& theta);

struct QueryResult {
    PolicyParams theta_hat;
    double predicted_reward = 0.0;
    bool predicted_feasible = false;
    double surrogate_value = 0.0;  // soft surrogate at theta_hat
    int n_starts_used = 0;
    bool fallback_flag = false;         // no start ended hard-feasible
    bool extrapolation_warning = false;  // v_p outside var_bounds
};

// Maximizes the soft surrogate over theta_bounds by multistart L-BFGS from
// n_starts LHS points plus the best policies of the 3 nearest training
// variations, then picks the hard-feasible endpoint of maximal predicted
// reward (fallback: best soft surrogate).
QueryResult query(const PerfModel& m, const TaskVariation& v_p, const TrainingData& data,
                  int n_starts, std::uint64_t seed);

// Bundle directory: gp.model, svm.model, meta, best.csv.
void save_perf_bundle(const PerfModel& m, const std::filesystem::path& dir);
PerfModel load_perf_bundle(const std::filesystem::path& dir);

// Rebuilds the warm-start training slice stored in a bundle.
TrainingData training_data_from_model(const PerfModel& m);

}  // namespace btmg
