#include "btmg/gp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "btmg/kernels.hpp"
#include "btmg/records_io.hpp"
#include "btmg/rng.hpp"

namespace btmg {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2*pi)

struct CholResult {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;
};

// Cholesky of K + noise_var*I with the jitter ladder: first attempt bare,
// then 1e-10 * trace/n doubled up to 6 times before giving up.
CholResult chol_with_jitter(const Eigen::MatrixXd& K, double noise_var) {
    const auto n = K.rows();
    const double base = 1e-10 * K.trace() / static_cast<double>(n);
    Eigen::MatrixXd Kbar = K;
    CholResult out;
    for (int attempt = 0; attempt <= 7; ++attempt) {
        const double jitter = attempt == 0 ? 0.0 : base * std::pow(2.0, attempt - 1);
        Kbar = K;
        Kbar.diagonal().array() += noise_var + jitter;
        out.llt.compute(Kbar);
        if (out.llt.info() == Eigen::Success) {
            out.jitter = jitter;
            return out;
        }
    }
    throw std::runtime_error("gp: Cholesky failed even after the jitter ladder");
}

double lml_from_chol(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& alpha) {
    const double n = static_cast<double>(y.size());
    const double log_det_half = llt.matrixLLT().diagonal().array().log().sum();
    return -0.5 * y.dot(alpha) - log_det_half - 0.5 * n * kLog2Pi;
}

void standardize(const Eigen::VectorXd& y, double& y_mean, double& y_scale) {
    y_mean = y.mean();
    const double var = (y.array() - y_mean).square().sum() / static_cast<double>(y.size());
    y_scale = var > 0.0 ? std::sqrt(var) : 1.0;
}

// Seeded uniform subsample without replacement; indices kept sorted so the
// retained rows appear in their original order.
void subsample_rows(Eigen::MatrixXd& X, Eigen::VectorXd& y, int cap, std::uint64_t seed) {
    if (X.rows() <= cap) return;
    std::vector<int> idx(static_cast<std::size_t>(X.rows()));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    for (int i = 0; i < cap; ++i) {
        const auto j = i + static_cast<int>(rng.index(static_cast<std::uint64_t>(idx.size()) -
                                                      static_cast<std::uint64_t>(i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(cap));
    std::sort(idx.begin(), idx.end());
    Eigen::MatrixXd Xs(cap, X.cols());
    Eigen::VectorXd ys(cap);
    for (int i = 0; i < cap; ++i) {
        Xs.row(i) = X.row(idx[static_cast<std::size_t>(i)]);
        ys[i] = y[idx[static_cast<std::size_t>(i)]];
    }
    X = std::move(Xs);
    y = std::move(ys);
}

}  // namespace

Bounds GPFitOptions::hyper_box() {
    Eigen::VectorXd lo(3), hi(3);
    lo << std::log(0.03), std::log(0.1), std::log(1e-8);
    hi << std::log(3.0), std::log(10.0), std::log(1.0);
    return Bounds(lo, hi);
}

double log_marginal_likelihood(double lengthscale, double signal_var, double noise_var,
                               const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() != y.size() || y.size() < 1)
        throw std::invalid_argument("log_marginal_likelihood: X rows must equal y length >= 1");
    if (!(lengthscale > 0.0) || !(signal_var > 0.0) || noise_var < 0.0)
        throw std::invalid_argument("log_marginal_likelihood: nonpositive hyperparameters");
    const Eigen::MatrixXd K =
        rbf_from_sq_dists(pairwise_sq_dists(X), lengthscale, signal_var);
    CholResult ch = chol_with_jitter(K, noise_var);
    const Eigen::VectorXd alpha = ch.llt.solve(y);
    return lml_from_chol(ch.llt, y, alpha);
}

GPModel GPModel::condition(Eigen::MatrixXd X, Eigen::VectorXd y_std, double y_mean, double y_scale,
                           const GPHypers& hp) {
    if (!(hp.lengthscale > 0.0) || !(hp.signal_var > 0.0) || hp.noise_var < 0.0)
        throw std::invalid_argument("gp: nonpositive hyperparameters");
    GPModel m;
    const Eigen::MatrixXd K = rbf_from_sq_dists(pairwise_sq_dists(X), hp.lengthscale, hp.signal_var);
    CholResult ch = chol_with_jitter(K, hp.noise_var);
    m.alpha_ = ch.llt.solve(y_std);
    m.lml_ = lml_from_chol(ch.llt, y_std, m.alpha_);
    m.L_ = ch.llt.matrixL();
    m.jitter_ = ch.jitter;
    m.X_ = std::move(X);
    m.y_std_ = std::move(y_std);
    m.hp_ = hp;
    m.y_mean_ = y_mean;
    m.y_scale_ = y_scale;
    return m;
}

GPModel GPModel::fit(const Eigen::MatrixXd& X_in, const Eigen::VectorXd& y_in, std::uint64_t seed,
                     const GPFitOptions& opts) {
    if (X_in.rows() != y_in.size() || y_in.size() < 1)
        throw std::invalid_argument("gp_fit: X rows must equal y length >= 1");

    Eigen::MatrixXd X = X_in;
    Eigen::VectorXd y = y_in;
    subsample_rows(X, y, opts.max_points, mix_seed(seed, 0x9d));

    double y_mean, y_scale;
    standardize(y, y_mean, y_scale);
    Eigen::VectorXd y_std = (y.array() - y_mean) / y_scale;

    GPHypers hp;  // defaults for the degenerate single-point case
    if (X.rows() >= 2) {
        // The O(n^3) likelihood search runs on a smaller subsample; the final
        // conditioning below still uses all retained points.
        Eigen::MatrixXd Xh = X;
        Eigen::VectorXd yh = y_std;
        subsample_rows(Xh, yh, opts.hyper_points, mix_seed(seed, 0x9e));
        const Eigen::MatrixXd D2 = pairwise_sq_dists(Xh);
        const double n = static_cast<double>(Xh.rows());

        // Objective: average log marginal likelihood over (log l, log sf2,
        // log sn2); the 1/n scaling keeps grad_tol meaningful across sizes.
        Objective avg_lml = [&](const Eigen::VectorXd& t, Eigen::VectorXd& grad) {
            const double l = std::exp(t[0]);
            const double sf2 = std::exp(t[1]);
            const double sn2 = std::exp(t[2]);
            const Eigen::MatrixXd K = rbf_from_sq_dists(D2, l, sf2);
            CholResult ch = chol_with_jitter(K, sn2);
            const Eigen::VectorXd alpha = ch.llt.solve(yh);
            const double lml = lml_from_chol(ch.llt, yh, alpha);

            const Eigen::MatrixXd Kinv =
                ch.llt.solve(Eigen::MatrixXd::Identity(K.rows(), K.rows()));
            const double eff_noise = sn2 + ch.jitter;
            const double a_dot_a = alpha.squaredNorm();
            const double a_K_a = alpha.dot(yh) - eff_noise * a_dot_a;
            const double tr_Kinv = Kinv.trace();
            const double tr_Kinv_K = n - eff_noise * tr_Kinv;

            const Eigen::MatrixXd KD2 = K.cwiseProduct(D2);
            const double a_M_a = alpha.dot(KD2 * alpha) / (l * l);
            const double tr_Kinv_M = Kinv.cwiseProduct(KD2).sum() / (l * l);

            grad.resize(3);
            grad[0] = 0.5 * (a_M_a - tr_Kinv_M) / n;
            grad[1] = 0.5 * (a_K_a - tr_Kinv_K) / n;
            grad[2] = 0.5 * sn2 * (a_dot_a - tr_Kinv) / n;
            return lml / n;
        };

        OptResult best = multistart_max(avg_lml, GPFitOptions::hyper_box(), opts.n_starts, {},
                                        seed, opts.inner, /*parallel=*/false);
        hp.lengthscale = std::exp(best.x_star[0]);
        hp.signal_var = std::exp(best.x_star[1]);
        hp.noise_var = std::exp(best.x_star[2]);
    }
    return condition(std::move(X), std::move(y_std), y_mean, y_scale, hp);
}

GPModel GPModel::fit_fixed(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GPHypers& hp) {
    if (X.rows() != y.size() || y.size() < 1)
        throw std::invalid_argument("gp_fit: X rows must equal y length >= 1");
    double y_mean, y_scale;
    standardize(y, y_mean, y_scale);
    Eigen::VectorXd y_std = (y.array() - y_mean) / y_scale;
    return condition(X, std::move(y_std), y_mean, y_scale, hp);
}

GPModel::GPModel(const GPModel& other)
    : X_(other.X_),
      y_std_(other.y_std_),
      alpha_(other.alpha_),
      L_(other.L_),
      hp_(other.hp_),
      jitter_(other.jitter_),
      y_mean_(other.y_mean_),
      y_scale_(other.y_scale_),
      lml_(other.lml_),
      clamp_count_(other.clamp_count_.load()) {}

GPModel& GPModel::operator=(const GPModel& other) {
    if (this != &other) {
        X_ = other.X_;
        y_std_ = other.y_std_;
        alpha_ = other.alpha_;
        L_ = other.L_;
        hp_ = other.hp_;
        jitter_ = other.jitter_;
        y_mean_ = other.y_mean_;
        y_scale_ = other.y_scale_;
        lml_ = other.lml_;
        clamp_count_.store(other.clamp_count_.load());
    }
    return *this;
}

std::pair<double, double> GPModel::predict(const Eigen::VectorXd& x) const {
    if (x.size() != X_.cols()) throw std::invalid_argument("gp_predict: dimension mismatch");
    const Eigen::VectorXd d2 = (X_.rowwise() - x.transpose()).rowwise().squaredNorm();
    const Eigen::VectorXd kst =
        (hp_.signal_var * (-d2.array() / (2.0 * hp_.lengthscale * hp_.lengthscale)).exp()).matrix();
    const double mean = y_mean_ + y_scale_ * kst.dot(alpha_);
    const Eigen::VectorXd v = L_.triangularView<Eigen::Lower>().solve(kst);
    double var = hp_.signal_var - v.squaredNorm();
    if (var < 0.0) {
        var = 0.0;
        ++clamp_count_;
    }
    return {mean, var * y_scale_ * y_scale_};
}

double GPModel::predict_mean(const Eigen::VectorXd& x) const {
    if (x.size() != X_.cols()) throw std::invalid_argument("gp_predict: dimension mismatch");
    const Eigen::VectorXd d2 = (X_.rowwise() - x.transpose()).rowwise().squaredNorm();
    const Eigen::VectorXd kst =
        (hp_.signal_var * (-d2.array() / (2.0 * hp_.lengthscale * hp_.lengthscale)).exp()).matrix();
    return y_mean_ + y_scale_ * kst.dot(alpha_);
}

std::pair<double, Eigen::VectorXd> GPModel::predict_mean_grad(const Eigen::VectorXd& x) const {
    if (x.size() != X_.cols()) throw std::invalid_argument("gp_predict: dimension mismatch");
    const double l2 = hp_.lengthscale * hp_.lengthscale;
    const Eigen::VectorXd d2 = (X_.rowwise() - x.transpose()).rowwise().squaredNorm();
    const Eigen::VectorXd kst = (hp_.signal_var * (-d2.array() / (2.0 * l2)).exp()).matrix();
    const double mean = y_mean_ + y_scale_ * kst.dot(alpha_);
    const Eigen::VectorXd w = (kst.array() * alpha_.array()).matrix();
    const Eigen::VectorXd grad_std = (X_.transpose() * w - x * w.sum()) / l2;
    return {mean, y_scale_ * grad_std};
}

namespace {

// Shared tail of the batch predictors once the cross-kernel matrix is built.
void finish_batch(const Eigen::MatrixXd& Kst, const Eigen::MatrixXd& L,
                  const Eigen::VectorXd& alpha, double signal_var, double y_mean, double y_scale,
                  std::atomic<long>& clamps, Eigen::VectorXd& mean, Eigen::VectorXd& var) {
    mean = (y_mean + y_scale * (Kst.transpose() * alpha).array()).matrix();
    const Eigen::MatrixXd V = L.triangularView<Eigen::Lower>().solve(Kst);
    var.resize(Kst.cols());
    long clamped = 0;
    for (Eigen::Index j = 0; j < Kst.cols(); ++j) {
        double v = signal_var - V.col(j).squaredNorm();
        if (v < 0.0) {
            v = 0.0;
            ++clamped;
        }
        var[j] = v * y_scale * y_scale;
    }
    if (clamped) clamps += clamped;
}

}  // namespace

void GPModel::predict_batch(const Eigen::MatrixXd& Q, Eigen::VectorXd& mean,
                            Eigen::VectorXd& var) const {
    const Eigen::MatrixXd Kst =
        rbf_from_sq_dists(cross_sq_dists(X_, Q), hp_.lengthscale, hp_.signal_var);
    finish_batch(Kst, L_, alpha_, hp_.signal_var, y_mean_, y_scale_, clamp_count_, mean, var);
}

void GPModel::predict_batch_serial(const Eigen::MatrixXd& Q, Eigen::VectorXd& mean,
                                   Eigen::VectorXd& var) const {
    const Eigen::MatrixXd Kst =
        rbf_from_sq_dists_serial(cross_sq_dists_serial(X_, Q), hp_.lengthscale, hp_.signal_var);
    finish_batch(Kst, L_, alpha_, hp_.signal_var, y_mean_, y_scale_, clamp_count_, mean, var);
}

Eigen::VectorXd GPModel::mean_grad(const Eigen::VectorXd& x) const {
    if (x.size() != X_.cols()) throw std::invalid_argument("gp_mean_grad: dimension mismatch");
    const Eigen::VectorXd d2 = (X_.rowwise() - x.transpose()).rowwise().squaredNorm();
    const Eigen::VectorXd w =
        (hp_.signal_var * (-d2.array() / (2.0 * hp_.lengthscale * hp_.lengthscale)).exp() *
         alpha_.array())
            .matrix();
    const Eigen::VectorXd grad_std =
        (X_.transpose() * w - x * w.sum()) / (hp_.lengthscale * hp_.lengthscale);
    return y_scale_ * grad_std;
}

void GPModel::predict_grad(const Eigen::VectorXd& x, double& mean, double& var,
                           Eigen::VectorXd& dmean, Eigen::VectorXd& dvar) const {
    if (x.size() != X_.cols()) throw std::invalid_argument("gp predict_grad: dimension mismatch");
    const double l2 = hp_.lengthscale * hp_.lengthscale;
    const Eigen::VectorXd d2 = (X_.rowwise() - x.transpose()).rowwise().squaredNorm();
    const Eigen::VectorXd kst = (hp_.signal_var * (-d2.array() / (2.0 * l2)).exp()).matrix();

    mean = y_mean_ + y_scale_ * kst.dot(alpha_);
    const Eigen::VectorXd v = L_.triangularView<Eigen::Lower>().solve(kst);
    const Eigen::VectorXd w = L_.triangularView<Eigen::Lower>().transpose().solve(v);
    double var_std = hp_.signal_var - v.squaredNorm();
    if (var_std < 0.0) {
        var_std = 0.0;
        ++clamp_count_;
    }
    var = var_std * y_scale_ * y_scale_;

    const Eigen::VectorXd aw = kst.cwiseProduct(alpha_);
    dmean = y_scale_ * (X_.transpose() * aw - x * aw.sum()) / l2;
    const Eigen::VectorXd ww = kst.cwiseProduct(w);
    dvar = -2.0 * y_scale_ * y_scale_ * (X_.transpose() * ww - x * ww.sum()) / l2;
}

std::string GPModel::serialize() const {
    std::ostringstream os;
    os << "gp 1\n";
    os << X_.rows() << " " << X_.cols() << "\n";
    os << format_double(hp_.lengthscale) << " " << format_double(hp_.signal_var) << " "
       << format_double(hp_.noise_var) << "\n";
    os << format_double(y_mean_) << " " << format_double(y_scale_) << "\n";
    for (Eigen::Index i = 0; i < X_.rows(); ++i) {
        for (Eigen::Index j = 0; j < X_.cols(); ++j) os << (j ? " " : "") << format_double(X_(i, j));
        os << " " << format_double(y_std_[i]) << "\n";
    }
    return os.str();
}

GPModel GPModel::deserialize(const std::string& text) {
    std::istringstream is(text);
    std::string magic;
    int version = 0;
    is >> magic >> version;
    if (magic != "gp" || version != 1)
        throw std::runtime_error("gp: unrecognized model header '" + magic + "'");
    Eigen::Index n = 0, d = 0;
    GPHypers hp;
    double y_mean, y_scale;
    is >> n >> d >> hp.lengthscale >> hp.signal_var >> hp.noise_var >> y_mean >> y_scale;
    if (!is || n < 1 || d < 1) throw std::runtime_error("gp: malformed model dimensions");
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd y_std(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) is >> X(i, j);
        is >> y_std[i];
    }
    if (!is) throw std::runtime_error("gp: truncated model data");
    return condition(std::move(X), std::move(y_std), y_mean, y_scale, hp);
}

void GPModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << serialize();
    if (!out) throw std::runtime_error("write failure on '" + path.string() + "'");
}

GPModel GPModel::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize(ss.str());
}

}  // namespace btmg
