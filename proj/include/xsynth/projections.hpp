#ifndef XSYNTH_PROJECTIONS_HPP
#define XSYNTH_PROJECTIONS_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <variant>
#include <vector>

#include "xsynth/errors.hpp"

namespace xsynth {

/// Feasible sets the weight estimators optimize over.
struct Simplex {};                       // { w : w_i >= 0, sum w_i = 1 }
struct L1Ball { double q; };             // { w : ||w||_1 <= q }
struct L1BallAffine { double q; };       // { w : ||w||_1 <= q, sum w_i = 1 }, needs q >= 1
struct FixedEqual {};                    // the single point (1/N, ..., 1/N)

using ConstraintSet = std::variant<Simplex, L1Ball, L1BallAffine, FixedEqual>;

struct SolverOptions {
    double tol = 1e-10;          // relative objective-change stop threshold
    int max_iter = 20000;
    double dykstra_tol = 1e-12;  // successive-iterate inf-norm change
    int dykstra_max_iter = 10000;
};

namespace detail {

/// Euclidean projection onto { w : w_i >= 0, sum w_i = radius } by
/// sort-and-threshold: theta is the largest shift keeping the active set
/// positive.
inline Eigen::VectorXd project_scaled_simplex(const Eigen::VectorXd& v, double radius) {
    const Eigen::Index n = v.size();
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cumsum = 0.0;
    double theta = 0.0;
    Eigen::Index support = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        cumsum += u[static_cast<std::size_t>(j)];
        double cand = (cumsum - radius) / static_cast<double>(j + 1);
        if (u[static_cast<std::size_t>(j)] - cand > 0.0) {
            theta = cand;
            support = j + 1;
        }
    }
    (void)support;
    return (v.array() - theta).cwiseMax(0.0).matrix();
}

} // namespace detail

/// argmin over the probability simplex of ||w - v||_2.
inline Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
    if (v.size() == 0) throw std::invalid_argument("project_simplex: empty vector");
    return detail::project_scaled_simplex(v, 1.0);
}

/// Euclidean projection onto the l1 ball of radius q. Interior points are
/// returned unchanged; otherwise project |v| onto the scaled simplex and
/// restore signs.
inline Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double q) {
    if (v.size() == 0) throw std::invalid_argument("project_l1_ball: empty vector");
    if (!(q > 0.0)) throw std::invalid_argument("project_l1_ball: q must be positive");
    if (v.lpNorm<1>() <= q) return v;
    Eigen::VectorXd proj = detail::project_scaled_simplex(v.cwiseAbs(), q);
    return proj.array() * v.array().sign();
}

/// Euclidean projection onto { ||w||_1 <= q } ∩ { sum w = 1 } by Dykstra's
/// alternating projections. Plain alternation converges into the
/// intersection but not to the nearest point; Dykstra's correction terms
/// recover the true projection.
inline Eigen::VectorXd project_l1_affine(const Eigen::VectorXd& v, double q,
                                         const SolverOptions& opts = {}) {
    const Eigen::Index n = v.size();
    if (n == 0) throw std::invalid_argument("project_l1_affine: empty vector");
    if (q < 1.0) throw std::invalid_argument("project_l1_affine: q < 1 gives an empty set");

    auto onto_plane = [n](const Eigen::VectorXd& w) {
        return (w.array() - (w.sum() - 1.0) / static_cast<double>(n)).matrix().eval();
    };

    Eigen::VectorXd x = v;
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
    for (int it = 0; it < opts.dykstra_max_iter; ++it) {
        Eigen::VectorXd yb = project_l1_ball(x + p, q);
        p = x + p - yb;
        Eigen::VectorXd xn = onto_plane(yb + r);
        r = yb + r - xn;
        double change = (xn - x).lpNorm<Eigen::Infinity>();
        // the iterate can stall for a few cycles while the increments keep
        // evolving, so a small successive change alone is not convergence;
        // at the solution the two set-projections also agree
        double gap = (xn - yb).lpNorm<Eigen::Infinity>();
        x = xn;
        if (change < opts.dykstra_tol && gap < opts.dykstra_tol
            && x.lpNorm<1>() <= q + 1e-10)
            return x;
    }
    throw numeric_error("project_l1_affine: Dykstra did not converge");
}

/// Projection onto an arbitrary ConstraintSet (n gives the dimension for
/// the FixedEqual singleton).
inline Eigen::VectorXd project(const ConstraintSet& c, const Eigen::VectorXd& v,
                               const SolverOptions& opts = {}) {
    return std::visit(
        [&](const auto& set) -> Eigen::VectorXd {
            using T = std::decay_t<decltype(set)>;
            if constexpr (std::is_same_v<T, Simplex>) {
                return project_simplex(v);
            } else if constexpr (std::is_same_v<T, L1Ball>) {
                return project_l1_ball(v, set.q);
            } else if constexpr (std::is_same_v<T, L1BallAffine>) {
                return project_l1_affine(v, set.q, opts);
            } else {
                return Eigen::VectorXd::Constant(v.size(), 1.0 / static_cast<double>(v.size()));
            }
        },
        c);
}

} // namespace xsynth

#endif
