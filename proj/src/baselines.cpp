#include "btmg/baselines.hpp"

#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

#include "btmg/records_io.hpp"
#include "btmg/rng.hpp"

namespace btmg {

DirectModel train_direct(const TrainingData& data, const Bounds& var_bounds,
                         const Bounds& theta_bounds, std::uint64_t seed,
                         const GPFitOptions& opts) {
    if (data.variations.size() < 2 || data.best_params.size() != data.variations.size())
        throw std::invalid_argument("train_direct: need at least 2 best (v, theta) pairs");

    const int n = static_cast<int>(data.variations.size());
    Eigen::MatrixXd X(n, var_bounds.dim());
    for (int i = 0; i < n; ++i)
        X.row(i) = normalize(data.variations[static_cast<std::size_t>(i)].v, var_bounds).transpose();

    DirectModel m;
    m.var_bounds = var_bounds;
    m.theta_bounds = theta_bounds;
    m.outputs.reserve(static_cast<std::size_t>(theta_bounds.dim()));
    for (int j = 0; j < theta_bounds.dim(); ++j) {
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) y[i] = data.best_params[static_cast<std::size_t>(i)].theta[j];
        m.outputs.push_back(GPModel::fit(X, y, mix_seed(seed, static_cast<std::uint64_t>(j)), opts));
    }
    return m;
}

PolicyParams query_direct(const DirectModel& m, const TaskVariation& v_p) {
    const Eigen::VectorXd x = normalize(v_p.v, m.var_bounds);
    Eigen::VectorXd theta(m.theta_bounds.dim());
    for (std::size_t j = 0; j < m.outputs.size(); ++j)
        theta[static_cast<int>(j)] = m.outputs[j].predict(x).first;
    return PolicyParams{m.theta_bounds.clamp(theta)};
}

void save_direct_bundle(const DirectModel& m, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream meta(dir / "meta");
    if (!meta) throw std::runtime_error("cannot open '" + (dir / "meta").string() + "' for writing");
    meta << "direct 1\n" << m.outputs.size() << "\n";
    auto bounds_line = [&](const Bounds& b) {
        meta << b.dim();
        for (int i = 0; i < b.dim(); ++i) meta << " " << format_double(b.lower[i]);
        for (int i = 0; i < b.dim(); ++i) meta << " " << format_double(b.upper[i]);
        meta << "\n";
    };
    bounds_line(m.var_bounds);
    bounds_line(m.theta_bounds);
    if (!meta) throw std::runtime_error("write failure on direct bundle meta");
    for (std::size_t j = 0; j < m.outputs.size(); ++j)
        m.outputs[j].save(dir / ("dim_" + std::to_string(j) + ".model"));
}

DirectModel load_direct_bundle(const std::filesystem::path& dir) {
    std::ifstream meta(dir / "meta");
    if (!meta) throw std::runtime_error("cannot open '" + (dir / "meta").string() + "' for reading");
    std::string magic;
    int version = 0;
    std::size_t n_outputs = 0;
    meta >> magic >> version >> n_outputs;
    if (magic != "direct" || version != 1)
        throw std::runtime_error("direct bundle: unrecognized meta header");
    auto read_bounds = [&]() {
        int d = 0;
        meta >> d;
        if (!meta || d < 1) throw std::runtime_error("direct bundle: malformed bounds");
        Eigen::VectorXd lo(d), hi(d);
        for (int i = 0; i < d; ++i) meta >> lo[i];
        for (int i = 0; i < d; ++i) meta >> hi[i];
        return Bounds(lo, hi);
    };
    DirectModel m;
    m.var_bounds = read_bounds();
    m.theta_bounds = read_bounds();
    if (!meta) throw std::runtime_error("direct bundle: truncated meta");
    for (std::size_t j = 0; j < n_outputs; ++j)
        m.outputs.push_back(GPModel::load(dir / ("dim_" + std::to_string(j) + ".model")));
    return m;
}

int nearest_neighbor_index(const std::vector<TaskVariation>& variations, const Bounds& var_bounds,
                           const TaskVariation& v_p) {
    if (variations.empty()) throw std::invalid_argument("nearest_neighbor: empty training set");
    const Eigen::VectorXd q = normalize(v_p.v, var_bounds);
    int best = 0;
    double best_d = (normalize(variations[0].v, var_bounds) - q).norm();
    for (std::size_t i = 1; i < variations.size(); ++i) {
        const double d = (normalize(variations[i].v, var_bounds) - q).norm();
        if (d < best_d) {
            best = static_cast<int>(i);
            best_d = d;
        }
    }
    return best;
}

PolicyParams nearest_neighbor(const TrainingData& data, const Bounds& var_bounds,
                              const TaskVariation& v_p) {
    const int idx = nearest_neighbor_index(data.variations, var_bounds, v_p);
    return data.best_params[static_cast<std::size_t>(idx)];
}

int medoid_index(const std::vector<TaskVariation>& variations, const Bounds& var_bounds) {
    if (variations.empty()) throw std::invalid_argument("single_policy: empty training set");
    std::vector<Eigen::VectorXd> pts;
    pts.reserve(variations.size());
    for (const TaskVariation& v : variations) pts.push_back(normalize(v.v, var_bounds));
    int best = 0;
    double best_sum = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < pts.size(); ++j) sum += (pts[i] - pts[j]).norm();
        if (sum < best_sum) {
            best = static_cast<int>(i);
            best_sum = sum;
        }
    }
    return best;
}

PolicyParams single_policy(const TrainingData& data, const Bounds& var_bounds) {
    const int idx = medoid_index(data.variations, var_bounds);
    return data.best_params[static_cast<std::size_t>(idx)];
}

std::pair<PolicyParams, EvalRecord> baseline_learned(const TaskSetup& task,
                                                     const TaskVariation& v_p,
                                                     const BOConfig& cfg) {
    const BOResult res = bo_learn(
        [&](const PolicyParams& theta) { return task.evaluate(v_p, theta); },
        task.policy_bounds(), cfg);
    return {res.best_params, res.history[static_cast<std::size_t>(res.best_index)]};
}

}  // namespace btmg
