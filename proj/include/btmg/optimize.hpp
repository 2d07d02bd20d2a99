#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "btmg/bounds.hpp"

namespace btmg {

struct OptimizerOptions {
    int max_iters = 200;
    int memory = 10;
    double grad_tol = 1e-8;  // on the projected-gradient infinity norm
    double c1 = 1e-4;        // Wolfe sufficient-decrease constant
    double c2 = 0.9;         // Wolfe curvature constant
    int line_budget = 20;    // strong-Wolfe trial evaluations before Armijo fallback
};

struct OptResult {
    Eigen::VectorXd x_star;
    double f_star = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Objective evaluated jointly with its gradient (grad is resized and filled).
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

// Box-constrained L-BFGS minimization with strong-Wolfe line search and
// gradient projection at the bounds.  Guarantees f(x_star) <= f(x0); every
// iterate is projected into the box.  Throws std::runtime_error naming the
// offending point if the objective or gradient turns non-finite.
OptResult lbfgs_min(const Objective& obj, const Eigen::VectorXd& x0, const Bounds& bounds,
                    const OptimizerOptions& opts = {});

OptResult lbfgs_min(const std::function<double(const Eigen::VectorXd&)>& f,
                    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                    const Eigen::VectorXd& x0, const Bounds& bounds,
                    const OptimizerOptions& opts = {});

// Per-start diagnostics of a multistart run (start points in evaluation
// order: LHS points first, then extra_starts).
struct MultistartDiag {
    std::vector<Eigen::VectorXd> starts;
    std::vector<double> start_values;  // objective (maximization sense) at each start
    std::vector<OptResult> results;    // maximization sense; failed starts: iterations = -1
    int n_failed = 0;
    int best_index = -1;
};

// Maximizes obj by running lbfgs_min on -obj from n_starts LHS points plus
// all extra_starts.  Ties broken by lowest start index; per-start failures
// are skipped; throws only if every start fails.  Deterministic under seed
// whether or not the starts run concurrently.
OptResult multistart_max(const Objective& obj, const Bounds& bounds, int n_starts,
                         const std::vector<Eigen::VectorXd>& extra_starts, std::uint64_t seed,
                         const OptimizerOptions& opts = {}, bool parallel = true,
                         MultistartDiag* diag = nullptr);

}  // namespace btmg
