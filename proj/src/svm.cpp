#include "btmg/svm.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "btmg/kernels.hpp"
#include "btmg/parallel.hpp"
#include "btmg/records_io.hpp"

namespace btmg {

namespace {

double median_abs_nonzero(const Eigen::VectorXd& margins) {
    std::vector<double> mags;
    mags.reserve(static_cast<std::size_t>(margins.size()));
    for (Eigen::Index i = 0; i < margins.size(); ++i)
        if (margins[i] != 0.0) mags.push_back(std::abs(margins[i]));
    if (mags.empty()) return 0.0;
    std::sort(mags.begin(), mags.end());
    const std::size_t n = mags.size();
    return n % 2 == 1 ? mags[n / 2] : 0.5 * (mags[n / 2 - 1] + mags[n / 2]);
}

// Decision value for one query against an explicit support set; the single
// worker shared by decision(), both batch variants, and the tests' oracle.
double decision_one(const Eigen::MatrixXd& sv, const Eigen::VectorXd& coef, double bias,
                    double gamma, const Eigen::VectorXd& x) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < sv.rows(); ++i)
        acc += coef[i] * std::exp(-gamma * (sv.row(i).transpose() - x).squaredNorm());
    return acc + bias;
}

}  // namespace

SVMModel SVMModel::fit(const Eigen::MatrixXd& X, const Eigen::VectorXi& labels, double C,
                       double gamma, std::uint64_t seed, const SVMOptions& opts) {
    (void)seed;
    if (!(C > 0.0) || !(gamma > 0.0))
        throw std::invalid_argument("svm_fit: C and gamma must be positive");
    if (X.rows() != labels.size() || X.rows() < 1)
        throw std::invalid_argument("svm_fit: X rows must equal label count >= 1");

    const Eigen::Index n = X.rows();
    Eigen::Index n_pos = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (labels[i] != 0 && labels[i] != 1)
            throw std::invalid_argument("svm_fit: labels must be 0 or 1");
        n_pos += labels[i];
    }
    const Eigen::Index n_neg = n - n_pos;

    SVMModel m;
    m.gamma_ = gamma;
    m.c_ = C;
    if (n_pos == 0 || n_neg == 0) {
        m.constant_ = true;
        m.constant_label_ = n_pos > 0 ? 1 : -1;
        m.bias_ = static_cast<double>(m.constant_label_);
        m.beta_ = std::log(3.0);
        m.w_pos_ = m.w_neg_ = 1.0;
        m.support_X_.resize(0, X.cols());
        m.coef_.resize(0);
        return m;
    }

    m.w_pos_ = static_cast<double>(n) / (2.0 * static_cast<double>(n_pos));
    m.w_neg_ = static_cast<double>(n) / (2.0 * static_cast<double>(n_neg));

    Eigen::VectorXi y(n);
    Eigen::VectorXd box(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        y[i] = labels[i] == 1 ? 1 : -1;
        box[i] = C * (labels[i] == 1 ? m.w_pos_ : m.w_neg_);
    }

    const Eigen::MatrixXd K = rbf_from_sq_dists(pairwise_sq_dists(X), std::sqrt(0.5 / gamma), 1.0);

    // SMO on the dual: minimize 1/2 a'Qa - sum(a) s.t. 0 <= a_i <= box_i,
    // sum(a_i y_i) = 0, with Q_ij = y_i y_j K_ij.  G is the dual gradient
    // Qa - 1; the maximal-violating pair comes from the -y_t G_t scores.
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd G = Eigen::VectorXd::Constant(n, -1.0);
    long updates = 0;
    double gap = std::numeric_limits<double>::infinity();
    while (updates < opts.max_pair_updates) {
        int i = -1, j = -1;
        double up_max = -std::numeric_limits<double>::infinity();
        double low_min = std::numeric_limits<double>::infinity();
        for (Eigen::Index t = 0; t < n; ++t) {
            const double score = -static_cast<double>(y[t]) * G[t];
            const bool in_up = y[t] == 1 ? a[t] < box[t] : a[t] > 0.0;
            const bool in_low = y[t] == 1 ? a[t] > 0.0 : a[t] < box[t];
            if (in_up && score > up_max) {
                up_max = score;
                i = static_cast<int>(t);
            }
            if (in_low && score < low_min) {
                low_min = score;
                j = static_cast<int>(t);
            }
        }
        gap = up_max - low_min;
        if (i < 0 || j < 0 || gap <= opts.kkt_tol) break;

        // Step t on the pair: da_i = +y_i t, da_j = -y_j t keeps the equality
        // constraint; the 1-D objective is quadratic with curvature eta.
        double eta = K(i, i) + K(j, j) - 2.0 * K(i, j);
        if (eta < 1e-12) eta = 1e-12;
        double t_step = (up_max - (-static_cast<double>(y[j]) * G[j])) / eta;

        auto clip_range = [&](Eigen::Index idx, int sign) {
            // Feasible t interval so that a[idx] + sign*t stays in [0, box].
            return sign > 0 ? std::pair<double, double>(-a[idx], box[idx] - a[idx])
                            : std::pair<double, double>(a[idx] - box[idx], a[idx]);
        };
        const auto [lo_i, hi_i] = clip_range(i, y[i]);
        const auto [lo_j, hi_j] = clip_range(j, -y[j]);
        t_step = std::min({t_step, hi_i, hi_j});
        t_step = std::max({t_step, lo_i, lo_j});

        const double da_i = static_cast<double>(y[i]) * t_step;
        const double da_j = -static_cast<double>(y[j]) * t_step;
        a[i] += da_i;
        a[j] += da_j;
        // Snap coordinates that landed within rounding dust of the box.
        for (Eigen::Index idx : {static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)}) {
            if (a[idx] < 1e-12) a[idx] = 0.0;
            if (a[idx] > box[idx] - 1e-12) a[idx] = box[idx];
        }
        // dG_t = y_t * t * (K_ti - K_tj), vectorized over all points.
        G += (t_step * y.cast<double>().array() * (K.col(i) - K.col(j)).array()).matrix();
        ++updates;
    }
    m.pair_updates_ = updates;
    m.kkt_gap_ = gap;

    // Bias from the free support vectors (KKT: -y_t G_t equals the bias
    // there); midpoint of the violating-pair scores if none is free.
    double bias_acc = 0.0;
    int n_free = 0;
    for (Eigen::Index t = 0; t < n; ++t) {
        if (a[t] > 0.0 && a[t] < box[t]) {
            bias_acc += -static_cast<double>(y[t]) * G[t];
            ++n_free;
        }
    }
    if (n_free > 0) {
        m.bias_ = bias_acc / n_free;
    } else {
        double up_max = -std::numeric_limits<double>::infinity();
        double low_min = std::numeric_limits<double>::infinity();
        for (Eigen::Index t = 0; t < n; ++t) {
            const double score = -static_cast<double>(y[t]) * G[t];
            const bool in_up = y[t] == 1 ? a[t] < box[t] : a[t] > 0.0;
            const bool in_low = y[t] == 1 ? a[t] > 0.0 : a[t] < box[t];
            if (in_up) up_max = std::max(up_max, score);
            if (in_low) low_min = std::min(low_min, score);
        }
        m.bias_ = 0.5 * (up_max + low_min);
    }

    // Dual objective 1/2 a'Qa - sum(a) = 1/2 a'(G - (-1)) ... G = Qa - 1, so
    // a'Qa = a'(G + 1) and the objective is (a'G + a'1)/2 - a'1.
    m.dual_objective_ = 0.5 * (a.dot(G) + a.sum()) - a.sum();
    m.alpha_ = a;
    m.labels_pm_ = y;

    Eigen::Index n_sv = 0;
    for (Eigen::Index t = 0; t < n; ++t)
        if (a[t] > 0.0) ++n_sv;
    m.support_X_.resize(n_sv, X.cols());
    m.coef_.resize(n_sv);
    Eigen::Index k = 0;
    for (Eigen::Index t = 0; t < n; ++t) {
        if (a[t] > 0.0) {
            m.support_X_.row(k) = X.row(t);
            m.coef_[k] = a[t] * static_cast<double>(y[t]);
            ++k;
        }
    }

    // Smoothing scale: beta = ln(3)/median(|margin|) over training points
    // with nonzero margin, so the sigmoid reads 0.75 at the median margin.
    const Eigen::VectorXd margins = m.decision_batch(X);
    const double med = median_abs_nonzero(margins);
    m.beta_ = med > 0.0 ? std::log(3.0) / med : 1.0;
    return m;
}

double SVMModel::decision(const Eigen::VectorXd& x) const {
    if (constant_) return static_cast<double>(constant_label_);
    return decision_one(support_X_, coef_, bias_, gamma_, x);
}

std::pair<double, Eigen::VectorXd> SVMModel::soft(const Eigen::VectorXd& x) const {
    const double dec = decision(x);
    const double s = 1.0 / (1.0 + std::exp(-beta_ * dec));
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(x.size());
    if (!constant_) {
        // d s / d x = s(1-s) * beta * d dec/d x;
        // d dec/d x = sum_i coef_i * k_i(x) * 2*gamma*(sv_i - x).
        const double w = s * (1.0 - s) * beta_ * 2.0 * gamma_;
        for (Eigen::Index i = 0; i < support_X_.rows(); ++i) {
            const double ki = std::exp(-gamma_ * (support_X_.row(i).transpose() - x).squaredNorm());
            grad += w * coef_[i] * ki * (support_X_.row(i).transpose() - x);
        }
    }
    return {s, grad};
}

Eigen::VectorXd SVMModel::decision_batch(const Eigen::MatrixXd& Q) const {
    Eigen::VectorXd out(Q.rows());
    if (constant_) {
        out.setConstant(static_cast<double>(constant_label_));
        return out;
    }
    par::parallel_for(Q.rows(), [&](std::int64_t j) {
        out[j] = decision_one(support_X_, coef_, bias_, gamma_, Q.row(j).transpose());
    });
    return out;
}

Eigen::VectorXd SVMModel::decision_batch_serial(const Eigen::MatrixXd& Q) const {
    Eigen::VectorXd out(Q.rows());
    if (constant_) {
        out.setConstant(static_cast<double>(constant_label_));
        return out;
    }
    for (Eigen::Index j = 0; j < Q.rows(); ++j)
        out[j] = decision_one(support_X_, coef_, bias_, gamma_, Q.row(j).transpose());
    return out;
}

std::string SVMModel::serialize() const {
    std::ostringstream os;
    os << "svm 1\n";
    os << (constant_ ? 1 : 0) << " " << constant_label_ << "\n";
    os << support_X_.rows() << " " << support_X_.cols() << "\n";
    os << format_double(bias_) << " " << format_double(gamma_) << " " << format_double(c_) << " "
       << format_double(w_pos_) << " " << format_double(w_neg_) << " " << format_double(beta_)
       << "\n";
    for (Eigen::Index i = 0; i < support_X_.rows(); ++i) {
        for (Eigen::Index j = 0; j < support_X_.cols(); ++j)
            os << (j ? " " : "") << format_double(support_X_(i, j));
        os << " " << format_double(coef_[i]) << "\n";
    }
    return os.str();
}

SVMModel SVMModel::deserialize(const std::string& text) {
    std::istringstream is(text);
    std::string magic;
    int version = 0;
    is >> magic >> version;
    if (magic != "svm" || version != 1)
        throw std::runtime_error("svm: unrecognized model header '" + magic + "'");
    SVMModel m;
    int constant_flag = 0;
    Eigen::Index n = 0, d = 0;
    is >> constant_flag >> m.constant_label_;
    is >> n >> d;
    is >> m.bias_ >> m.gamma_ >> m.c_ >> m.w_pos_ >> m.w_neg_ >> m.beta_;
    if (!is || n < 0 || d < 0) throw std::runtime_error("svm: malformed model dimensions");
    m.constant_ = constant_flag != 0;
    m.support_X_.resize(n, d);
    m.coef_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) is >> m.support_X_(i, j);
        is >> m.coef_[i];
    }
    if (!is) throw std::runtime_error("svm: truncated model data");
    return m;
}

void SVMModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << serialize();
    if (!out) throw std::runtime_error("write failure on '" + path.string() + "'");
}

SVMModel SVMModel::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize(ss.str());
}

}  // namespace btmg
