#include "btmg/optimize.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "btmg/lhs.hpp"
#include "btmg/parallel.hpp"

namespace btmg {

namespace {

struct LineEval {
    double a = 0.0;          // step length
    double f = 0.0;          // objective value
    double dphi = 0.0;       // directional derivative g(x_a)'d
    Eigen::VectorXd x;
    Eigen::VectorXd g;
};

[[noreturn]] void non_finite_abort(const Eigen::VectorXd& x, double f) {
    std::ostringstream os;
    os << "lbfgs_min: non-finite objective/gradient at x = [";
    for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << "], f = " << f;
    throw std::runtime_error(os.str());
}

class LineSearcher {
public:
    LineSearcher(const Objective& obj, const Bounds& bounds, const Eigen::VectorXd& x0,
                 const Eigen::VectorXd& d, double f0, double dphi0, const OptimizerOptions& opts)
        : obj_(obj), bounds_(bounds), x0_(x0), d_(d), f0_(f0), dphi0_(dphi0), opts_(opts) {}

    LineEval eval(double a) {
        LineEval e;
        e.a = a;
        e.x = bounds_.clamp(x0_ + a * d_);
        e.f = obj_(e.x, e.g);
        if (!std::isfinite(e.f) || !e.g.allFinite()) non_finite_abort(e.x, e.f);
        e.dphi = e.g.dot(d_);
        ++used_;
        if (e.f < best_f_ || best_used_ == 0) {
            best_f_ = e.f;
            best_ = e;
            best_used_ = 1;
        }
        return e;
    }

    bool armijo(const LineEval& e) const { return e.f <= f0_ + opts_.c1 * e.a * dphi0_; }
    bool curvature(const LineEval& e) const { return std::abs(e.dphi) <= -opts_.c2 * dphi0_; }
    bool exhausted() const { return used_ >= opts_.line_budget; }
    bool have_best() const { return best_used_ != 0 && best_f_ < f0_; }
    const LineEval& best() const { return best_; }

    // Strong-Wolfe search on [0, a_max]; returns the accepted evaluation or,
    // when the trial budget runs out, the best decreasing point seen while
    // backtracking (Armijo fallback).  Returns false if no decrease exists.
    bool search(double a_max, LineEval& out) {
        double a = std::min(1.0, a_max);
        LineEval prev;
        prev.a = 0.0;
        prev.f = f0_;
        prev.dphi = dphi0_;
        bool have_prev_eval = false;

        while (!exhausted()) {
            LineEval e = eval(a);
            if (!armijo(e) || (have_prev_eval && e.f >= prev.f)) return zoom(prev, e, out);
            if (curvature(e)) {
                out = e;
                return true;
            }
            if (e.dphi >= 0.0) return zoom(e, prev, out);
            if (a >= a_max * (1.0 - 1e-12)) {
                // Cannot extend past the feasible segment; Armijo holds and the
                // slope is still negative, so the boundary step is the best.
                out = e;
                return true;
            }
            prev = e;
            have_prev_eval = true;
            a = std::min(2.0 * a, a_max);
        }
        return fallback(a_max, out);
    }

private:
    bool zoom(LineEval lo, LineEval hi, LineEval& out) {
        while (!exhausted()) {
            const double span = hi.a - lo.a;
            if (std::abs(span) < 1e-16 * std::max(1.0, std::abs(lo.a))) break;
            // Quadratic model through (lo.f, lo.dphi, hi.f); exact for
            // quadratic objectives, bisection safeguard otherwise.
            double a = lo.a + 0.5 * span;
            const double denom = 2.0 * (hi.f - lo.f - lo.dphi * span);
            if (denom != 0.0) {
                const double a_q = lo.a - lo.dphi * span * span / denom;
                const double t = (a_q - lo.a) / span;
                if (std::isfinite(a_q) && t > 0.05 && t < 0.95) a = a_q;
            }
            LineEval e = eval(a);
            if (!armijo(e) || e.f >= lo.f) {
                hi = e;
            } else {
                if (curvature(e)) {
                    out = e;
                    return true;
                }
                if (e.dphi * (hi.a - lo.a) >= 0.0) hi = lo;
                lo = e;
            }
        }
        if (armijo(lo) && lo.a > 0.0 && lo.x.size() > 0) {
            out = lo;
            return true;
        }
        return fallback(std::max(lo.a, hi.a), out);
    }

    bool fallback(double a_start, LineEval& out) {
        if (have_best() && armijo(best())) {
            out = best();
            return true;
        }
        double a = std::min(1.0, a_start);
        for (int k = 0; k < 25; ++k) {
            LineEval e = eval(a);
            if (armijo(e)) {
                out = e;
                return true;
            }
            a *= 0.5;
        }
        if (have_best()) {
            out = best();
            return true;
        }
        return false;
    }

    const Objective& obj_;
    const Bounds& bounds_;
    const Eigen::VectorXd& x0_;
    const Eigen::VectorXd& d_;
    double f0_, dphi0_;
    const OptimizerOptions& opts_;
    int used_ = 0;
    double best_f_ = std::numeric_limits<double>::infinity();
    LineEval best_;
    int best_used_ = 0;
};

}  // namespace

OptResult lbfgs_min(const Objective& obj, const Eigen::VectorXd& x0, const Bounds& bounds,
                    const OptimizerOptions& opts) {
    bounds.validate();
    if (x0.size() != bounds.dim()) throw std::invalid_argument("lbfgs_min: x0 dimension mismatch");

    Eigen::VectorXd x = bounds.clamp(x0);
    Eigen::VectorXd g;
    double f = obj(x, g);
    if (!std::isfinite(f) || !g.allFinite()) non_finite_abort(x, f);

    Eigen::VectorXd best_x = x;
    double best_f = f;

    std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;  // (s, y)
    OptResult res;
    int iter = 0;
    for (; iter < opts.max_iters; ++iter) {
        // Projected gradient: components frozen where the bound is active and
        // the descent direction points out of the box.
        Eigen::VectorXd pg = g;
        for (int i = 0; i < x.size(); ++i) {
            if ((x[i] <= bounds.lower[i] && g[i] > 0.0) || (x[i] >= bounds.upper[i] && g[i] < 0.0))
                pg[i] = 0.0;
        }
        if (pg.lpNorm<Eigen::Infinity>() <= opts.grad_tol) {
            res.converged = true;
            break;
        }

        // Two-loop recursion on the projected gradient.
        Eigen::VectorXd d = -pg;
        if (!pairs.empty()) {
            std::vector<double> alpha(pairs.size());
            Eigen::VectorXd q = pg;
            for (std::size_t k = pairs.size(); k-- > 0;) {
                const auto& [s, yv] = pairs[k];
                const double rho = 1.0 / yv.dot(s);
                alpha[k] = rho * s.dot(q);
                q -= alpha[k] * yv;
            }
            const auto& [sn, yn] = pairs.back();
            q *= sn.dot(yn) / yn.dot(yn);
            for (std::size_t k = 0; k < pairs.size(); ++k) {
                const auto& [s, yv] = pairs[k];
                const double rho = 1.0 / yv.dot(s);
                const double beta = rho * yv.dot(q);
                q += (alpha[k] - beta) * s;
            }
            d = -q;
        }
        for (int i = 0; i < x.size(); ++i) {
            if ((x[i] <= bounds.lower[i] && d[i] < 0.0) || (x[i] >= bounds.upper[i] && d[i] > 0.0))
                d[i] = 0.0;
        }
        double dphi0 = g.dot(d);
        if (!(dphi0 < 0.0)) {
            d = -pg;
            dphi0 = g.dot(d);
        }

        // Longest feasible step along d.
        double a_max = std::numeric_limits<double>::infinity();
        for (int i = 0; i < x.size(); ++i) {
            if (d[i] > 0.0)
                a_max = std::min(a_max, (bounds.upper[i] - x[i]) / d[i]);
            else if (d[i] < 0.0)
                a_max = std::min(a_max, (bounds.lower[i] - x[i]) / d[i]);
        }
        if (!(a_max > 0.0) || !std::isfinite(dphi0)) break;

        LineSearcher search(obj, bounds, x, d, f, dphi0, opts);
        LineEval accepted;
        if (!search.search(a_max, accepted)) break;  // no decrease along d: give up

        Eigen::VectorXd s = accepted.x - x;
        Eigen::VectorXd yv = accepted.g - g;
        x = accepted.x;
        f = accepted.f;
        g = accepted.g;
        if (f < best_f) {
            best_f = f;
            best_x = x;
        }
        const double sy = s.dot(yv);
        if (sy > 1e-12 * s.norm() * yv.norm()) {
            pairs.emplace_back(std::move(s), std::move(yv));
            if (static_cast<int>(pairs.size()) > opts.memory) pairs.pop_front();
        }
    }

    res.x_star = best_x;
    res.f_star = best_f;
    res.iterations = iter;
    return res;
}

OptResult lbfgs_min(const std::function<double(const Eigen::VectorXd&)>& f,
                    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                    const Eigen::VectorXd& x0, const Bounds& bounds, const OptimizerOptions& opts) {
    Objective obj = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g = grad(x);
        return f(x);
    };
    return lbfgs_min(obj, x0, bounds, opts);
}

OptResult multistart_max(const Objective& obj, const Bounds& bounds, int n_starts,
                         const std::vector<Eigen::VectorXd>& extra_starts, std::uint64_t seed,
                         const OptimizerOptions& opts, bool parallel, MultistartDiag* diag) {
    if (n_starts < 1 && extra_starts.empty())
        throw std::invalid_argument("multistart_max: need n_starts >= 1 or extra starts");

    std::vector<Eigen::VectorXd> starts =
        n_starts >= 1 ? lhs_sample(n_starts, bounds, seed) : std::vector<Eigen::VectorXd>{};
    for (const Eigen::VectorXd& s : extra_starts) starts.push_back(bounds.clamp(s));

    Objective neg = [&obj](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        const double f = obj(x, g);
        g = -g;
        return -f;
    };

    const std::int64_t n = static_cast<std::int64_t>(starts.size());
    std::vector<OptResult> results(starts.size());
    std::vector<double> start_values(starts.size());
    std::vector<std::string> failures(starts.size());
    std::vector<char> failed(starts.size(), 0);

    auto run_one = [&](std::int64_t i) {
        const std::size_t k = static_cast<std::size_t>(i);
        try {
            Eigen::VectorXd g0;
            start_values[k] = obj(starts[k], g0);
            OptResult r = lbfgs_min(neg, starts[k], bounds, opts);
            r.f_star = -r.f_star;  // back to maximization sense
            results[k] = std::move(r);
        } catch (const std::exception& e) {
            failed[k] = 1;
            failures[k] = e.what();
        }
    };
    if (parallel)
        par::parallel_for_jobs(n, 0, run_one);
    else
        for (std::int64_t i = 0; i < n; ++i) run_one(i);

    int best = -1;
    for (std::size_t k = 0; k < starts.size(); ++k) {
        if (failed[k]) continue;
        if (best < 0 || results[k].f_star > results[static_cast<std::size_t>(best)].f_star)
            best = static_cast<int>(k);
    }
    if (diag) {
        diag->starts = starts;
        diag->start_values = start_values;
        diag->results = results;
        diag->n_failed = 0;
        for (std::size_t k = 0; k < starts.size(); ++k) {
            if (failed[k]) {
                ++diag->n_failed;
                diag->results[k].iterations = -1;
            }
        }
        diag->best_index = best;
    }
    if (best < 0) {
        std::string first;
        for (std::size_t k = 0; k < starts.size(); ++k)
            if (failed[k]) {
                first = failures[k];
                break;
            }
        throw std::runtime_error("multistart_max: every start failed; first error: " + first);
    }
    return results[static_cast<std::size_t>(best)];
}

}  // namespace btmg
