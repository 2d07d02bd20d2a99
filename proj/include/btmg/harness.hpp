#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "btmg/bayesopt.hpp"
#include "btmg/gp.hpp"
#include "btmg/perf_model.hpp"
#include "btmg/svm.hpp"
#include "btmg/tasks.hpp"
#include "btmg/types.hpp"

namespace btmg {

enum class Method { learned, perf, nearest_neighbor, direct, single_policy };

inline constexpr std::array<Method, 5> kAllMethods = {
    Method::learned, Method::perf, Method::nearest_neighbor, Method::direct,
    Method::single_policy};

std::string method_name(Method m);
Method parse_method(const std::string& name);

// Per-unit seed derivation from the master seed; shared by the harness and
// the standalone CLI stages so partial runs replay the full protocol.
namespace seeds {
std::uint64_t train_vars(std::uint64_t master, int rep);
std::uint64_t test_vars(std::uint64_t master, int rep, std::uint64_t attempt);
std::uint64_t learn(std::uint64_t master, int rep, int var_idx);
std::uint64_t perf_train(std::uint64_t master, int rep);
std::uint64_t direct_train(std::uint64_t master, int rep);
std::uint64_t method_query(std::uint64_t master, int rep, int var_idx, Method m);
}  // namespace seeds

struct ExperimentConfig {
    TaskSetup task;  // id, profile, constants tables
    int n_train = 20;
    int n_test = 20;
    int repetitions = 5;
    std::uint64_t master_seed = 0;
    int jobs = 1;
    std::vector<Method> methods{kAllMethods.begin(), kAllMethods.end()};

    BOConfig bo;  // bo.seed is ignored; per-unit seeds derive from master_seed
    GPFitOptions gp;
    SVMOptions svm;
    double svm_c = 10.0;
    double svm_gamma = 0.0;  // <= 0 selects 1/dim
    double mu_factor = 0.25;
    int query_starts = 16;

    PerfOptions perf_options() const;
    void validate() const;
};

struct RawRow {
    int rep = 0;
    int var_idx = 0;
    Method method = Method::learned;
    EvalRecord record;
};

struct MetricSummary {
    double median = 0.0, p25 = 0.0, p75 = 0.0;
    double median_feasible = 0.0;  // valid only when has_feasible
    bool has_feasible = false;
};

struct MethodSummary {
    Method method = Method::learned;
    double success_pct = 0.0;
    std::vector<double> success_by_rep;
    std::vector<MetricSummary> metrics;  // parallel to report metric labels
};

struct ExperimentReport {
    TaskId task = TaskId::obstacle;
    Profile profile = Profile::sim;
    std::uint64_t master_seed = 0;
    int n_test = 0;
    int repetitions = 0;
    std::string config_hash;
    std::vector<Method> methods;
    std::vector<RawRow> rows;  // ordered by (rep, var_idx, method)
};

// Type-7 percentile (linear interpolation on the sorted values), q in [0,1].
double percentile(std::vector<double> values, double q);

// Table rows: obstacle reports total reward and finish time; push reports the
// two error metrics.
std::vector<std::string> report_metric_labels(TaskId task);
double report_metric_value(TaskId task, std::size_t metric_idx, const EvalRecord& rec);

std::vector<MethodSummary> summarize(const ExperimentReport& report);

void write_raw_csv(const std::filesystem::path& path, const ExperimentReport& report);
ExperimentReport read_raw_csv(const std::filesystem::path& path);
void write_report_files(const std::filesystem::path& results_dir, const ExperimentReport& report);

// Full protocol: per repetition sample train/test variations, learn each
// training variation with BO, fit the surrogate and baseline models, produce
// and evaluate a policy per (test variation, method).  Writes the run
// directory (config.snapshot, vars/, history/, models/, results/) under
// out_dir and returns the report.  Deterministic under master_seed for any
// jobs count.
ExperimentReport run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace btmg
