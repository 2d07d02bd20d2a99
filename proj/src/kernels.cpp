#include "btmg/kernels.hpp"

#include <cmath>

#include "btmg/parallel.hpp"

namespace btmg {

namespace {

// Fills row i of the symmetric distance matrix (and mirrors it).  Each call
// touches only elements (i, j<=i) and (j<i, i), so concurrent calls with
// distinct i never race.
inline void pairwise_row(const Eigen::MatrixXd& X, Eigen::MatrixXd& D2, std::int64_t i) {
    D2(i, i) = 0.0;
    for (std::int64_t j = 0; j < i; ++j) {
        const double d2 = (X.row(i) - X.row(j)).squaredNorm();
        D2(i, j) = d2;
        D2(j, i) = d2;
    }
}

inline void cross_row(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Q, Eigen::MatrixXd& S,
                      std::int64_t i) {
    for (std::int64_t j = 0; j < Q.rows(); ++j)
        S(i, j) = (X.row(i) - Q.row(j)).squaredNorm();
}

inline void rbf_col(const Eigen::MatrixXd& D2, Eigen::MatrixXd& K, double inv_two_l2,
                    double signal_var, std::int64_t j) {
    K.col(j) = signal_var * (-inv_two_l2 * D2.col(j).array()).exp();
}

}  // namespace

Eigen::MatrixXd pairwise_sq_dists(const Eigen::MatrixXd& X) {
    const std::int64_t n = X.rows();
    Eigen::MatrixXd D2(n, n);
    par::parallel_for(n, [&](std::int64_t i) { pairwise_row(X, D2, i); });
    return D2;
}

Eigen::MatrixXd pairwise_sq_dists_serial(const Eigen::MatrixXd& X) {
    const std::int64_t n = X.rows();
    Eigen::MatrixXd D2(n, n);
    for (std::int64_t i = 0; i < n; ++i) pairwise_row(X, D2, i);
    return D2;
}

Eigen::MatrixXd cross_sq_dists(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Q) {
    Eigen::MatrixXd S(X.rows(), Q.rows());
    par::parallel_for(X.rows(), [&](std::int64_t i) { cross_row(X, Q, S, i); });
    return S;
}

Eigen::MatrixXd cross_sq_dists_serial(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Q) {
    Eigen::MatrixXd S(X.rows(), Q.rows());
    for (std::int64_t i = 0; i < X.rows(); ++i) cross_row(X, Q, S, i);
    return S;
}

Eigen::MatrixXd rbf_from_sq_dists(const Eigen::MatrixXd& D2, double lengthscale, double signal_var) {
    const double inv_two_l2 = 1.0 / (2.0 * lengthscale * lengthscale);
    Eigen::MatrixXd K(D2.rows(), D2.cols());
    par::parallel_for(D2.cols(), [&](std::int64_t j) { rbf_col(D2, K, inv_two_l2, signal_var, j); });
    return K;
}

Eigen::MatrixXd rbf_from_sq_dists_serial(const Eigen::MatrixXd& D2, double lengthscale,
                                         double signal_var) {
    const double inv_two_l2 = 1.0 / (2.0 * lengthscale * lengthscale);
    Eigen::MatrixXd K(D2.rows(), D2.cols());
    for (std::int64_t j = 0; j < D2.cols(); ++j) rbf_col(D2, K, inv_two_l2, signal_var, j);
    return K;
}

double rbf_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double lengthscale,
                  double signal_var) {
    const double d2 = (a - b).squaredNorm();
    return signal_var * std::exp(-d2 / (2.0 * lengthscale * lengthscale));
}

}  // namespace btmg
