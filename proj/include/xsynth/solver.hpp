#ifndef XSYNTH_SOLVER_HPP
#define XSYNTH_SOLVER_HPP

#include <Eigen/Dense>
#include <cmath>
#include <optional>

#include "xsynth/projections.hpp"
#include "xsynth/rng.hpp"

namespace xsynth {

struct WeightFit {
    Eigen::VectorXd w;
    std::optional<double> intercept;
    double objective = 0.0;   // sum of squared residuals on the training rows
    int iterations = 0;
    bool converged = false;
    ConstraintSet constraint = Simplex{};
};

namespace detail {

/// Largest eigenvalue of the PSD Gram matrix by power iteration.
inline double gram_lmax(const Eigen::MatrixXd& G) {
    const Eigen::Index n = G.rows();
    SplitMix64 rng(UINT64_C(0x5DEECE66D));
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform() + 0.5;
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < 50; ++it) {
        Eigen::VectorXd gv = G * v;
        double norm = gv.norm();
        if (norm <= 0.0) return 0.0;
        v = gv / norm;
        double next = v.dot(G * v);
        if (std::fabs(next - lambda) <= 1e-9 * std::max(1.0, std::fabs(next))) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return lambda;
}

} // namespace detail

/// Least squares of y on X restricted to the constraint set, by accelerated
/// projected gradient (FISTA) with adaptive restart. The step is 1/L with
/// L = 1.05 * lmax(2 X'X) from power iteration; restarting whenever the
/// objective increases keeps the iterates monotone, so the returned point
/// never does worse than the feasible starting point project(c, 0).
inline WeightFit constrained_least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                           const ConstraintSet& c, const SolverOptions& opts = {}) {
    const Eigen::Index m = X.rows();
    const Eigen::Index n = X.cols();
    if (m < 1 || n < 1) throw std::invalid_argument("constrained_least_squares: empty problem");
    if (y.size() != m) throw std::invalid_argument("constrained_least_squares: dimension mismatch");
    if (!X.allFinite() || !y.allFinite())
        throw std::invalid_argument("constrained_least_squares: non-finite input");

    WeightFit fit;
    fit.constraint = c;

    if (std::holds_alternative<FixedEqual>(c)) {
        fit.w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
        fit.objective = (y - X * fit.w).squaredNorm();
        fit.converged = true;
        return fit;
    }

    const Eigen::MatrixXd gram = X.transpose() * X;
    const Eigen::VectorXd xty = X.transpose() * y;
    const double yty = y.squaredNorm();
    auto objective = [&](const Eigen::VectorXd& w) {
        return w.dot(gram * w) - 2.0 * xty.dot(w) + yty;
    };

    Eigen::VectorXd w = project(c, Eigen::VectorXd::Zero(n), opts);
    double lips = 2.0 * detail::gram_lmax(gram) * 1.05;
    if (!(lips > 0.0)) {
        // X is (numerically) zero: the gradient vanishes everywhere.
        fit.w = w;
        fit.objective = (y - X * fit.w).squaredNorm();
        fit.converged = true;
        return fit;
    }
    const double step = 1.0 / lips;

    Eigen::VectorXd z = w;
    double f_prev = objective(w);
    double t = 1.0;
    int stable = 0;
    int it = 0;
    for (; it < opts.max_iter; ++it) {
        Eigen::VectorXd grad = 2.0 * (gram * z - xty);
        Eigen::VectorXd w_next = project(c, z - step * grad, opts);
        double f_next = objective(w_next);
        if (f_next > f_prev) {
            // restart: plain projected-gradient step from the best iterate
            t = 1.0;
            z = w;
            grad = 2.0 * (gram * z - xty);
            w_next = project(c, z - step * grad, opts);
            f_next = objective(w_next);
        }
        double rel = std::fabs(f_prev - f_next) / std::max(f_prev, 1e-30);
        stable = rel < opts.tol ? stable + 1 : 0;
        double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        z = w_next + ((t - 1.0) / t_next) * (w_next - w);
        t = t_next;
        w = w_next;
        f_prev = f_next;
        if (stable >= 10) {
            fit.converged = true;
            ++it;
            break;
        }
    }
    fit.w = w;
    fit.iterations = it;
    fit.objective = (y - X * w).squaredNorm();
    return fit;
}

} // namespace xsynth

#endif
