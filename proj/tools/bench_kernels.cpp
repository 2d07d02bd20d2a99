// Times the OpenMP kernels against their serial reference twins and checks
// that the results stay bitwise identical.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>

#include <Eigen/Core>

#include "btmg/gp.hpp"
#include "btmg/kernels.hpp"
#include "btmg/parallel.hpp"
#include "btmg/rng.hpp"
#include "btmg/svm.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

namespace {

double time_ms(const std::function<void()>& fn, int repeats) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

MatrixXd random_matrix(int rows, int cols, btmg::Rng& rng) {
    MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform01();
    return m;
}

template <class M>
bool same_bits(const M& a, const M& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

void row(const char* name, int n, int d, double serial_ms, double parallel_ms, bool identical) {
    std::printf("%-16s %6d %3d %10.2f %10.2f %7.2fx  %s\n", name, n, d, serial_ms, parallel_ms,
                serial_ms / parallel_ms, identical ? "bitwise-equal" : "MISMATCH");
}

}  // namespace

int main() {
    const int n = 1500, d = 10, q = 2000;
    const int repeats = 3;
    btmg::Rng rng(7);

    const MatrixXd X = random_matrix(n, d, rng);
    const MatrixXd Q = random_matrix(q, d, rng);

    std::printf("threads: %d\n", btmg::par::max_threads());
    std::printf("%-16s %6s %3s %10s %10s %8s\n", "kernel", "n", "d", "serial_ms", "par_ms",
                "speedup");

    MatrixXd a, b;
    const double t_ps = time_ms([&] { a = btmg::pairwise_sq_dists_serial(X); }, repeats);
    const double t_pp = time_ms([&] { b = btmg::pairwise_sq_dists(X); }, repeats);
    row("pairwise_sq", n, d, t_ps, t_pp, same_bits(a, b));

    const double t_cs = time_ms([&] { a = btmg::cross_sq_dists_serial(X, Q); }, repeats);
    const double t_cp = time_ms([&] { b = btmg::cross_sq_dists(X, Q); }, repeats);
    row("cross_sq", n, d, t_cs, t_cp, same_bits(a, b));

    const MatrixXd D2 = btmg::pairwise_sq_dists(X);
    const double t_rs = time_ms([&] { a = btmg::rbf_from_sq_dists_serial(D2, 0.4, 1.3); }, repeats);
    const double t_rp = time_ms([&] { b = btmg::rbf_from_sq_dists(D2, 0.4, 1.3); }, repeats);
    row("rbf", n, d, t_rs, t_rp, same_bits(a, b));

    VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = std::sin(3.0 * X(i, 0)) + 0.5 * X(i, 1);
    const btmg::GPModel gp = btmg::GPModel::fit_fixed(X, y, {0.4, 1.0, 1e-4});
    VectorXd m1, v1, m2, v2;
    const double t_gs = time_ms([&] { gp.predict_batch_serial(Q, m1, v1); }, repeats);
    const double t_gp = time_ms([&] { gp.predict_batch(Q, m2, v2); }, repeats);
    row("gp_batch", n, d, t_gs, t_gp, same_bits(m1, m2) && same_bits(v1, v2));

    VectorXi labels(n);
    for (int i = 0; i < n; ++i) labels[i] = X.row(i).sum() > 0.5 * d ? 1 : 0;
    const btmg::SVMModel svm = btmg::SVMModel::fit(X, labels, 10.0, 1.0 / d, 0);
    VectorXd s1, s2;
    const double t_ss = time_ms([&] { s1 = svm.decision_batch_serial(Q); }, repeats);
    const double t_sp = time_ms([&] { s2 = svm.decision_batch(Q); }, repeats);
    row("svm_batch", n, d, t_ss, t_sp, same_bits(s1, s2));

    return 0;
}
