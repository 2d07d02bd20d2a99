#pragma once

#include <Eigen/Core>
#include <sstream>
#include <stdexcept>

namespace btmg {

// Axis-aligned box; the domain of every optimisation and sampling routine.
struct Bounds {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    Bounds() = default;
    Bounds(Eigen::VectorXd lo, Eigen::VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) {
        validate();
    }

    int dim() const { return static_cast<int>(lower.size()); }

    void validate() const {
        if (lower.size() != upper.size())
            throw std::invalid_argument("Bounds: lower/upper dimension mismatch");
        for (int i = 0; i < lower.size(); ++i) {
            if (!(lower[i] < upper[i])) {
                std::ostringstream os;
                os << "Bounds: lower[" << i << "]=" << lower[i]
                   << " must be strictly below upper[" << i << "]=" << upper[i];
                throw std::invalid_argument(os.str());
            }
        }
    }

    bool contains(const Eigen::VectorXd& x, double tol = 0.0) const {
        if (x.size() != lower.size()) return false;
        for (int i = 0; i < x.size(); ++i)
            if (x[i] < lower[i] - tol || x[i] > upper[i] + tol) return false;
        return true;
    }

    Eigen::VectorXd clamp(Eigen::VectorXd x) const {
        for (int i = 0; i < x.size(); ++i) {
            if (x[i] < lower[i]) x[i] = lower[i];
            if (x[i] > upper[i]) x[i] = upper[i];
        }
        return x;
    }

    Eigen::VectorXd width() const { return upper - lower; }

    Eigen::VectorXd center() const { return 0.5 * (lower + upper); }
};

// Maps x into the unit cube; lower -> 0 and upper -> 1 exactly.
inline Eigen::VectorXd normalize(const Eigen::VectorXd& x, const Bounds& b) {
    if (x.size() != b.lower.size())
        throw std::invalid_argument("normalize: dimension mismatch");
    Eigen::VectorXd t(x.size());
    for (int i = 0; i < x.size(); ++i)
        t[i] = (x[i] - b.lower[i]) / (b.upper[i] - b.lower[i]);
    return t;
}

// Inverse of normalize on the unit cube.
inline Eigen::VectorXd denormalize(const Eigen::VectorXd& t, const Bounds& b) {
    if (t.size() != b.lower.size())
        throw std::invalid_argument("denormalize: dimension mismatch");
    Eigen::VectorXd x(t.size());
    for (int i = 0; i < t.size(); ++i)
        x[i] = b.lower[i] + t[i] * (b.upper[i] - b.lower[i]);
    return x;
}

}  // namespace btmg
