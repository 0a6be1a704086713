#ifndef XSYNTH_ESTIMATORS_HPP
#define XSYNTH_ESTIMATORS_HPP

#include <Eigen/Dense>

#include "xsynth/panel.hpp"
#include "xsynth/solver.hpp"

namespace xsynth {

/// Fit weights on training rows (X, y) by the requested method.
///
/// sc   - simplex-constrained least squares on the raw data, no intercept.
/// cl   - l1-ball ||w||_1 <= q on column-demeaned data; the unpenalized
///        intercept is recovered as mean(y) - mean_row(X)'w, which is
///        numerically equivalent to fitting it jointly.
/// mcl  - cl plus the adding-up constraint sum(w) = 1 (q >= 1).
/// did  - fixed equal weights 1/N with an intercept; no optimization.
inline WeightFit fit_weights(Method method, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             double q, const SolverOptions& opts = {}) {
    const Eigen::Index m = X.rows();
    const Eigen::Index n = X.cols();
    if (m < 1 || n < 1) throw std::invalid_argument("fit_weights: empty problem");
    if (y.size() != m) throw std::invalid_argument("fit_weights: dimension mismatch");

    if (method == Method::sc)
        return constrained_least_squares(X, y, Simplex{}, opts);

    if (m < 2) throw std::invalid_argument("fit_weights: intercept methods need at least 2 rows");

    const Eigen::RowVectorXd x_mean = X.colwise().mean();
    const double y_mean = y.mean();

    if (method == Method::did) {
        WeightFit fit;
        fit.constraint = FixedEqual{};
        fit.w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
        fit.intercept = y_mean - x_mean.dot(fit.w);
        fit.objective = (y.array() - *fit.intercept - (X * fit.w).array()).square().sum();
        fit.converged = true;
        return fit;
    }

    if (method == Method::mcl && q < 1.0)
        throw std::invalid_argument("fit_weights: mcl needs q >= 1");

    Eigen::MatrixXd Xd = X.rowwise() - x_mean;
    Eigen::VectorXd yd = y.array() - y_mean;
    ConstraintSet c = method == Method::cl ? ConstraintSet(L1Ball{q})
                                           : ConstraintSet(L1BallAffine{q});
    WeightFit fit = constrained_least_squares(Xd, yd, c, opts);
    fit.intercept = y_mean - x_mean.dot(fit.w);
    return fit;
}

/// r_t = y_t - mu_hat - x_t'w_hat, with mu_hat treated as 0 when absent.
inline Eigen::VectorXd residuals(const WeightFit& fit, const Eigen::MatrixXd& X,
                                 const Eigen::VectorXd& y) {
    if (X.cols() != fit.w.size()) throw std::invalid_argument("residuals: column count mismatch");
    if (X.rows() != y.size()) throw std::invalid_argument("residuals: row count mismatch");
    double mu = fit.intercept.value_or(0.0);
    return (y.array() - mu - (X * fit.w).array()).matrix();
}

} // namespace xsynth

#endif
