#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace btmg {

struct SVMOptions {
    double kkt_tol = 1e-3;               // SMO stopping tolerance on the KKT gap
    long max_pair_updates = 1000000;     // hard cap on SMO pair updates
};

// Class-weighted soft-margin SVM with RBF kernel k(x,x2)=exp(-gamma*|x-x2|^2),
// trained by SMO with maximal-violating-pair selection.  Margins are smoothed
// into (0,1) by a sigmoid whose scale beta is set from the median training
// margin, giving a differentiable stand-in for the hard classifier.
class SVMModel {
public:
    // labels are 0/1.  Class weights are n/(2*n_class); per-point box is
    // C*w_class.  If only one class is present, returns a constant classifier
    // flagged via constant().  The seed is accepted for interface uniformity;
    // maximal-violating-pair SMO is deterministic without it.
    static SVMModel fit(const Eigen::MatrixXd& X, const Eigen::VectorXi& labels, double C,
                        double gamma, std::uint64_t seed, const SVMOptions& opts = {});

    // Default gamma = 1/dim (normalized inputs).
    static double default_gamma(int dim) { return 1.0 / static_cast<double>(dim); }

    double decision(const Eigen::VectorXd& x) const;
    int classify(const Eigen::VectorXd& x) const { return decision(x) >= 0.0 ? 1 : 0; }

    // Sigmoid-smoothed feasibility in (0,1) with its analytic gradient.
    std::pair<double, Eigen::VectorXd> soft(const Eigen::VectorXd& x) const;

    // Batch decision values; parallel kernel over queries plus serial twin.
    Eigen::VectorXd decision_batch(const Eigen::MatrixXd& Q) const;
    Eigen::VectorXd decision_batch_serial(const Eigen::MatrixXd& Q) const;

    bool constant() const { return constant_; }
    double bias() const { return bias_; }
    double beta() const { return beta_; }
    double gamma() const { return gamma_; }
    double c() const { return c_; }
    double weight_pos() const { return w_pos_; }
    double weight_neg() const { return w_neg_; }
    int n_support() const { return static_cast<int>(support_X_.rows()); }
    const Eigen::MatrixXd& support_X() const { return support_X_; }
    const Eigen::VectorXd& coef() const { return coef_; }
    double kkt_gap() const { return kkt_gap_; }
    long pair_updates() const { return pair_updates_; }
    const Eigen::VectorXd& dual_alpha() const { return alpha_; }
    const Eigen::VectorXi& dual_labels() const { return labels_pm_; }
    double dual_objective() const { return dual_objective_; }

    std::string serialize() const;
    static SVMModel deserialize(const std::string& text);
    void save(const std::filesystem::path& path) const;
    static SVMModel load(const std::filesystem::path& path);

private:
    Eigen::MatrixXd support_X_;
    Eigen::VectorXd coef_;  // alpha_i * y_i per support vector
    double bias_ = 0.0;
    double gamma_ = 1.0;
    double c_ = 10.0;
    double w_pos_ = 1.0, w_neg_ = 1.0;
    double beta_ = 1.0;
    bool constant_ = false;
    int constant_label_ = 1;

    // Training diagnostics (kept for tests; not serialized).
    double kkt_gap_ = 0.0;
    long pair_updates_ = 0;
    Eigen::VectorXd alpha_;
    Eigen::VectorXi labels_pm_;
    double dual_objective_ = 0.0;
};

}  // namespace btmg
