#include "btmg/perf_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "btmg/optimize.hpp"
#include "btmg/records_io.hpp"
#include "btmg/rng.hpp"

namespace btmg {

Eigen::VectorXd PerfModel::joint_input(const TaskVariation& v, const PolicyParams& theta) const {
    Eigen::VectorXd x(var_bounds.dim() + theta_bounds.dim());
    x.head(var_bounds.dim()) = normalize(v.v, var_bounds);
    x.tail(theta_bounds.dim()) = normalize(theta.theta, theta_bounds);
    return x;
}

PerfModel train_perf(const TrainingData& data, const Bounds& var_bounds,
                     const Bounds& theta_bounds, std::uint64_t seed, const PerfOptions& opts) {
    if (data.records.empty()) throw std::invalid_argument("train_perf: empty history");

    PerfModel m;
    m.task = data.task;
    m.var_bounds = var_bounds;
    m.theta_bounds = theta_bounds;
    m.train_variations = data.variations;
    m.train_best = data.best_params;
    m.train_best_rewards = data.best_rewards;

    const int n = static_cast<int>(data.records.size());
    const int d = var_bounds.dim() + theta_bounds.dim();
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd y(n);
    Eigen::VectorXi labels(n);
    m.r_min = std::numeric_limits<double>::infinity();
    m.r_max = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const EvalRecord& r = data.records[static_cast<std::size_t>(i)];
        X.row(i) = m.joint_input(r.variation, r.params).transpose();
        y[i] = r.reward;
        labels[i] = r.feasible ? 1 : 0;
        m.r_min = std::min(m.r_min, r.reward);
        m.r_max = std::max(m.r_max, r.reward);
    }

    m.mu = opts.mu_factor * (m.r_max - m.r_min);
    if (!(m.mu > 0.0))
        throw std::invalid_argument(
            "train_perf: reward range is zero (constant rewards); the infeasibility penalty "
            "mu = mu_factor * (r_max - r_min) must be positive");

    m.j_hat = GPModel::fit(X, y, mix_seed(seed, 1), opts.gp);
    const double gamma = opts.svm_gamma > 0.0 ? opts.svm_gamma : SVMModel::default_gamma(d);
    m.f_hat = SVMModel::fit(X, labels, opts.svm_c, gamma, mix_seed(seed, 2), opts.svm);
    m.constant_classifier = m.f_hat.constant();
    return m;
}

double surrogate_reward_hard(const PerfModel& m, const TaskVariation& v,
                             const PolicyParams& theta) {
    const Eigen::VectorXd x = m.joint_input(v, theta);
    const double r_hat = m.j_hat.predict_mean(x);
    const int f_hat = m.f_hat.classify(x);
    return r_hat - (1.0 - static_cast<double>(f_hat)) * m.mu;
}

std::pair<double, Eigen::VectorXd> surrogate_reward_soft(const PerfModel& m,
                                                         const TaskVariation& v,
                                                         const PolicyParams& theta) {
    const Eigen::VectorXd x = m.joint_input(v, theta);
    const int dv = m.var_bounds.dim();
    const int dt = m.theta_bounds.dim();

    const auto [r_hat, dmean_joint] = m.j_hat.predict_mean_grad(x);
    const auto [f_soft, df_joint] = m.f_hat.soft(x);

    const double value = r_hat - (1.0 - f_soft) * m.mu;
    // Chain rule back to raw theta: x_norm = (theta - lo)/width.
    Eigen::VectorXd grad(dt);
    const Eigen::VectorXd width = m.theta_bounds.width();
    for (int j = 0; j < dt; ++j)
        grad[j] = (dmean_joint[dv + j] + m.mu * df_joint[dv + j]) / width[j];
    return {value, grad};
}

namespace {

// Indices of the k training variations nearest to v_p (normalized Euclidean,
// ties by lowest index).
std::vector<int> nearest_indices(const std::vector<TaskVariation>& variations,
                                 const Bounds& var_bounds, const TaskVariation& v_p, int k) {
    std::vector<int> order(variations.size());
    std::iota(order.begin(), order.end(), 0);
    const Eigen::VectorXd q = normalize(v_p.v, var_bounds);
    std::vector<double> dist(variations.size());
    for (std::size_t i = 0; i < variations.size(); ++i)
        dist[i] = (normalize(variations[i].v, var_bounds) - q).norm();
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return dist[static_cast<std::size_t>(a)] != dist[static_cast<std::size_t>(b)]
                   ? dist[static_cast<std::size_t>(a)] < dist[static_cast<std::size_t>(b)]
                   : a < b;
    });
    if (static_cast<int>(order.size()) > k) order.resize(static_cast<std::size_t>(k));
    return order;
}

}  // namespace

QueryResult query(const PerfModel& m, const TaskVariation& v_p, const TrainingData& data,
                  int n_starts, std::uint64_t seed) {
    if (v_p.v.size() != m.var_bounds.dim())
        throw std::invalid_argument("query: variation dimension mismatch");

    QueryResult out;
    out.extrapolation_warning = !m.var_bounds.contains(v_p.v, 1e-12);

    std::vector<Eigen::VectorXd> extras;
    if (!data.variations.empty() && data.best_params.size() == data.variations.size()) {
        for (int idx : nearest_indices(data.variations, m.var_bounds, v_p, 3))
            extras.push_back(data.best_params[static_cast<std::size_t>(idx)].theta);
    }

    // Soft surrogate scaled to O(1) for the optimizer; positive scaling keeps
    // the argmax and the dominance comparisons intact.
    const double scale = 1.0 / (m.r_max - m.r_min);
    Objective obj = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
        auto [value, g] = surrogate_reward_soft(m, v_p, PolicyParams{theta});
        grad = scale * g;
        return scale * value;
    };

    const OptimizerOptions opts{.max_iters = 100, .memory = 10, .grad_tol = 1e-6};
    MultistartDiag diag;
    multistart_max(obj, m.theta_bounds, n_starts, extras, seed, opts, /*parallel=*/true, &diag);

    // Candidate selection over all completed endpoints: hard-feasible with
    // maximal predicted reward first, best soft surrogate as fallback.
    int best_feasible = -1, best_soft = -1;
    double best_feasible_r = 0.0, best_soft_v = 0.0;
    std::vector<double> soft_values(diag.results.size());
    std::vector<double> rewards(diag.results.size());
    std::vector<int> feasible(diag.results.size(), 0);
    int used = 0;
    for (std::size_t k = 0; k < diag.results.size(); ++k) {
        if (diag.results[k].iterations < 0) continue;  // failed start
        ++used;
        const Eigen::VectorXd& th = diag.results[k].x_star;
        const Eigen::VectorXd x = m.joint_input(v_p, PolicyParams{th});
        rewards[k] = m.j_hat.predict_mean(x);
        feasible[k] = m.f_hat.classify(x);
        soft_values[k] = diag.results[k].f_star / scale;
        if (feasible[k] && (best_feasible < 0 || rewards[k] > best_feasible_r)) {
            best_feasible = static_cast<int>(k);
            best_feasible_r = rewards[k];
        }
        if (best_soft < 0 || soft_values[k] > best_soft_v) {
            best_soft = static_cast<int>(k);
            best_soft_v = soft_values[k];
        }
    }
    if (used == 0) throw std::runtime_error("query: every optimizer start failed");

    const int pick = best_feasible >= 0 ? best_feasible : best_soft;
    out.fallback_flag = best_feasible < 0;
    out.theta_hat = PolicyParams{diag.results[static_cast<std::size_t>(pick)].x_star};
    out.predicted_reward = rewards[static_cast<std::size_t>(pick)];
    out.predicted_feasible = feasible[static_cast<std::size_t>(pick)] == 1;
    out.surrogate_value = soft_values[static_cast<std::size_t>(pick)];
    out.n_starts_used = used;
    return out;
}

namespace {

void write_best_csv(const std::filesystem::path& path, const PerfModel& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    const TaskShape& shape = task_shape(m.task);
    out << "task_id";
    for (int i = 0; i < shape.var_dim; ++i) out << ",v_" << i;
    for (int i = 0; i < shape.theta_dim; ++i) out << ",theta_" << i;
    out << ",reward\n";
    for (std::size_t k = 0; k < m.train_variations.size(); ++k) {
        out << task_name(m.task);
        for (int i = 0; i < shape.var_dim; ++i)
            out << "," << format_double(m.train_variations[k].v[i]);
        for (int i = 0; i < shape.theta_dim; ++i)
            out << "," << format_double(m.train_best[k].theta[i]);
        out << "," << format_double(m.train_best_rewards[k]) << "\n";
    }
    if (!out) throw std::runtime_error("write failure on '" + path.string() + "'");
}

void read_best_csv(const std::filesystem::path& path, PerfModel& m) {
    std::ifstream in(path);
    if (!in) return;  // warm starts are optional in a bundle
    std::string line;
    if (!std::getline(in, line)) return;
    const TaskShape& shape = task_shape(m.task);
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (static_cast<int>(fields.size()) != 1 + shape.var_dim + shape.theta_dim + 1) {
            std::ostringstream os;
            os << path.string() << ":" << line_no << ": wrong field count";
            throw std::runtime_error(os.str());
        }
        TaskVariation v{m.task, Eigen::VectorXd(shape.var_dim)};
        PolicyParams p{Eigen::VectorXd(shape.theta_dim)};
        std::size_t k = 1;
        for (int i = 0; i < shape.var_dim; ++i) v.v[i] = parse_double(fields[k++]);
        for (int i = 0; i < shape.theta_dim; ++i) p.theta[i] = parse_double(fields[k++]);
        m.train_variations.push_back(std::move(v));
        m.train_best.push_back(std::move(p));
        m.train_best_rewards.push_back(parse_double(fields[k]));
    }
}

void write_bounds_line(std::ostream& os, const Bounds& b) {
    os << b.dim();
    for (int i = 0; i < b.dim(); ++i) os << " " << format_double(b.lower[i]);
    for (int i = 0; i < b.dim(); ++i) os << " " << format_double(b.upper[i]);
    os << "\n";
}

Bounds read_bounds_line(std::istream& is) {
    int d = 0;
    is >> d;
    if (!is || d < 1) throw std::runtime_error("perf bundle: malformed bounds");
    Eigen::VectorXd lo(d), hi(d);
    for (int i = 0; i < d; ++i) is >> lo[i];
    for (int i = 0; i < d; ++i) is >> hi[i];
    if (!is) throw std::runtime_error("perf bundle: truncated bounds");
    return Bounds(lo, hi);
}

}  // namespace

void save_perf_bundle(const PerfModel& m, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    m.j_hat.save(dir / "gp.model");
    m.f_hat.save(dir / "svm.model");
    std::ofstream meta(dir / "meta");
    if (!meta) throw std::runtime_error("cannot open '" + (dir / "meta").string() + "' for writing");
    meta << "perf 1\n" << task_name(m.task) << "\n";
    meta << format_double(m.mu) << " " << format_double(m.r_min) << " " << format_double(m.r_max)
         << " " << (m.constant_classifier ? 1 : 0) << "\n";
    write_bounds_line(meta, m.var_bounds);
    write_bounds_line(meta, m.theta_bounds);
    if (!meta) throw std::runtime_error("write failure on perf bundle meta");
    write_best_csv(dir / "best.csv", m);
}

PerfModel load_perf_bundle(const std::filesystem::path& dir) {
    std::ifstream meta(dir / "meta");
    if (!meta) throw std::runtime_error("cannot open '" + (dir / "meta").string() + "' for reading");
    std::string magic, task;
    int version = 0, constant_flag = 0;
    meta >> magic >> version;
    if (magic != "perf" || version != 1)
        throw std::runtime_error("perf bundle: unrecognized meta header");
    PerfModel m;
    meta >> task;
    m.task = parse_task(task);
    meta >> m.mu >> m.r_min >> m.r_max >> constant_flag;
    if (!meta) throw std::runtime_error("perf bundle: malformed meta");
    m.constant_classifier = constant_flag != 0;
    m.var_bounds = read_bounds_line(meta);
    m.theta_bounds = read_bounds_line(meta);
    m.j_hat = GPModel::load(dir / "gp.model");
    m.f_hat = SVMModel::load(dir / "svm.model");
    read_best_csv(dir / "best.csv", m);
    return m;
}

TrainingData training_data_from_model(const PerfModel& m) {
    TrainingData d;
    d.task = m.task;
    d.variations = m.train_variations;
    d.best_params = m.train_best;
    d.best_rewards = m.train_best_rewards;
    return d;
}

}  // namespace btmg
