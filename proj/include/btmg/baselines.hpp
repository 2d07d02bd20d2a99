#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "btmg/bayesopt.hpp"
#include "btmg/bounds.hpp"
#include "btmg/gp.hpp"
#include "btmg/tasks.hpp"
#include "btmg/types.hpp"

namespace btmg {

// Direct baseline: independent GP regressors from the task variation to each
// component of the best policy parameters.
struct DirectModel {
    std::vector<GPModel> outputs;  // one per theta dimension
    Bounds var_bounds;
    Bounds theta_bounds;
};

DirectModel train_direct(const TrainingData& data, const Bounds& var_bounds,
                         const Bounds& theta_bounds, std::uint64_t seed,
                         const GPFitOptions& opts = {});
PolicyParams query_direct(const DirectModel& m, const TaskVariation& v_p);

void save_direct_bundle(const DirectModel& m, const std::filesystem::path& dir);
DirectModel load_direct_bundle(const std::filesystem::path& dir);

// Nearest-neighbor baseline: best policy of the closest training variation
// (normalized Euclidean distance, ties by lowest index).
int nearest_neighbor_index(const std::vector<TaskVariation>& variations, const Bounds& var_bounds,
                           const TaskVariation& v_p);
PolicyParams nearest_neighbor(const TrainingData& data, const Bounds& var_bounds,
                              const TaskVariation& v_p);

// Single-policy baseline: best policy of the medoid training variation.
int medoid_index(const std::vector<TaskVariation>& variations, const Bounds& var_bounds);
PolicyParams single_policy(const TrainingData& data, const Bounds& var_bounds);

// Learned baseline: run the per-variation BO loop on the test variation
// itself and return its best policy with the corresponding record.
std::pair<PolicyParams, EvalRecord> baseline_learned(const TaskSetup& task,
                                                     const TaskVariation& v_p,
                                                     const BOConfig& cfg);

}  // namespace btmg
