#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

namespace btmg {

enum class TaskId { obstacle, push };

// Fixed per-task shape of the data records: dimensionality of the variation
// and policy vectors plus the names of the metric columns produced by the
// task evaluator (in the order they are written to CSV).
struct TaskShape {
    int var_dim = 0;
    int theta_dim = 0;
    std::vector<std::string> metric_names;
};

inline const TaskShape& task_shape(TaskId id) {
    static const TaskShape obstacle{3, 6, {"finish_time", "min_clearance", "success"}};
    static const TaskShape push{4, 4, {"pos_error", "ori_error", "contact"}};
    return id == TaskId::obstacle ? obstacle : push;
}

inline std::string task_name(TaskId id) { return id == TaskId::obstacle ? "obstacle" : "push"; }

inline TaskId parse_task(const std::string& name) {
    if (name == "obstacle") return TaskId::obstacle;
    if (name == "push") return TaskId::push;
    throw std::invalid_argument("unknown task '" + name + "' (expected 'obstacle' or 'push')");
}

// A concrete instance of the task family (obstacle geometry, start/goal
// poses, ...).  v lives inside the task's variation bounds.
struct TaskVariation {
    TaskId task = TaskId::obstacle;
    Eigen::VectorXd v;
};

// One point of the policy parameter space to be executed by the task.
struct PolicyParams {
    Eigen::VectorXd theta;
};

// Outcome of one policy execution on one variation.
struct EvalRecord {
    TaskVariation variation;
    PolicyParams params;
    double reward = 0.0;
    bool feasible = false;
    std::vector<double> metrics;  // named per task_shape().metric_names
};

// Everything the surrogate trainer consumes: the pooled evaluation history
// plus the per-variation best pairs used as optimisation restarts.
struct TrainingData {
    TaskId task = TaskId::obstacle;
    std::vector<EvalRecord> records;
    std::vector<TaskVariation> variations;
    std::vector<PolicyParams> best_params;  // parallel to variations
    std::vector<double> best_rewards;       // parallel to variations
};

}  // namespace btmg
