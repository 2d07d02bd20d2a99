#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "btmg/bounds.hpp"
#include "btmg/optimize.hpp"

namespace btmg {

struct GPHypers {
    double lengthscale = 0.3;
    double signal_var = 1.0;
    double noise_var = 1e-6;
};

struct GPFitOptions {
    int n_starts = 8;        // multistart restarts for the hyperparameter search
    int max_points = 2000;   // training-set cap; larger histories are subsampled (seeded)
    int hyper_points = 500;  // further cap for the O(n^3) likelihood search itself
    OptimizerOptions inner{.max_iters = 40, .memory = 10, .grad_tol = 1e-4};

    // Search box over (log lengthscale, log signal_var, log noise_var).
    static Bounds hyper_box();
};

// -0.5 y'(K+sn2 I)^-1 y - 0.5 log det(K+sn2 I) - n/2 log 2pi, via Cholesky
// with the jitter ladder (1e-10 * trace/n, doubled up to 6 times).
double log_marginal_likelihood(double lengthscale, double signal_var, double noise_var,
                               const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// Exact GP regression with isotropic RBF kernel on unit-cube-normalized
// inputs.  Targets are standardized internally; predictions are reported on
// the raw scale.
class GPModel {
public:
    GPModel() = default;
    GPModel(const GPModel& other);
    GPModel& operator=(const GPModel& other);
    GPModel(GPModel&&) = default;
    GPModel& operator=(GPModel&&) = default;

    // Standardizes y, then maximizes the log marginal likelihood over the
    // log-hyperparameter box from n_starts LHS points.  n = 1 (or a constant
    // target vector with n < 2) falls back to the default hyperparameters.
    static GPModel fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::uint64_t seed,
                       const GPFitOptions& opts = {});

    // Conditions on the data with the given hyperparameters (no search).
    static GPModel fit_fixed(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const GPHypers& hp);

    // Predictive mean and variance (raw target scale, variance clamped >= 0).
    std::pair<double, double> predict(const Eigen::VectorXd& x) const;

    // Mean-only prediction: skips the variance back-substitution, so it is
    // O(n·d) instead of O(n²).  The optimizer loops over the surrogate mean
    // only, and the quadratic term dominates once n reaches the subsample cap.
    double predict_mean(const Eigen::VectorXd& x) const;

    // Mean and its gradient from a single kernel-vector pass (same O(n·d)).
    std::pair<double, Eigen::VectorXd> predict_mean_grad(const Eigen::VectorXd& x) const;

    // Batch prediction over the rows of Q; the distance/kernel stages run on
    // the parallel kernels, the *_serial variant on their serial twins.
    void predict_batch(const Eigen::MatrixXd& Q, Eigen::VectorXd& mean, Eigen::VectorXd& var) const;
    void predict_batch_serial(const Eigen::MatrixXd& Q, Eigen::VectorXd& mean,
                              Eigen::VectorXd& var) const;

    // Analytic gradient of the predictive mean w.r.t. the (normalized) query.
    Eigen::VectorXd mean_grad(const Eigen::VectorXd& x) const;

    // Mean, variance, and both gradients in one pass (acquisition refinement).
    void predict_grad(const Eigen::VectorXd& x, double& mean, double& var,
                      Eigen::VectorXd& dmean, Eigen::VectorXd& dvar) const;

    const GPHypers& hypers() const { return hp_; }
    double y_mean() const { return y_mean_; }
    double y_scale() const { return y_scale_; }
    double lml() const { return lml_; }
    double jitter() const { return jitter_; }
    int n_points() const { return static_cast<int>(X_.rows()); }
    const Eigen::MatrixXd& train_X() const { return X_; }
    const Eigen::VectorXd& train_y_std() const { return y_std_; }
    const Eigen::VectorXd& alpha() const { return alpha_; }
    const Eigen::MatrixXd& chol() const { return L_; }
    long variance_clamp_count() const { return clamp_count_.load(); }

    // Portable text round-trip; reloading reconditions (Cholesky + alpha)
    // and reproduces predictions within 1e-10.
    std::string serialize() const;
    static GPModel deserialize(const std::string& text);
    void save(const std::filesystem::path& path) const;
    static GPModel load(const std::filesystem::path& path);

private:
    static GPModel condition(Eigen::MatrixXd X, Eigen::VectorXd y_std, double y_mean,
                             double y_scale, const GPHypers& hp);

    Eigen::MatrixXd X_;
    Eigen::VectorXd y_std_;
    Eigen::VectorXd alpha_;
    Eigen::MatrixXd L_;
    GPHypers hp_;
    double jitter_ = 0.0;
    double y_mean_ = 0.0;
    double y_scale_ = 1.0;
    double lml_ = 0.0;
    mutable std::atomic<long> clamp_count_{0};
};

}  // namespace btmg
