#pragma once

#include <Eigen/Core>

namespace btmg {

// Data-parallel kernel primitives shared by the GP and SVM code paths.
// Every parallel routine has a serial reference twin that runs the same
// per-row worker in a plain loop, so the two produce bitwise-identical
// results; the tests and the kernel benchmark rely on that.

// D2(i,j) = squared Euclidean distance between rows i and j of X.
Eigen::MatrixXd pairwise_sq_dists(const Eigen::MatrixXd& X);
Eigen::MatrixXd pairwise_sq_dists_serial(const Eigen::MatrixXd& X);

// S(i,j) = squared distance between row i of X and row j of Q.
Eigen::MatrixXd cross_sq_dists(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Q);
Eigen::MatrixXd cross_sq_dists_serial(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Q);

// Maps a squared-distance matrix to the RBF kernel signal_var * exp(-d2 / (2 l^2)).
Eigen::MatrixXd rbf_from_sq_dists(const Eigen::MatrixXd& D2, double lengthscale, double signal_var);
Eigen::MatrixXd rbf_from_sq_dists_serial(const Eigen::MatrixXd& D2, double lengthscale, double signal_var);

// Scalar RBF kernel value for two points.
double rbf_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double lengthscale,
                  double signal_var);

}  // namespace btmg
