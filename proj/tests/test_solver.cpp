#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <limits>

#include "oracles.hpp"
#include "xsynth/rng.hpp"
#include "xsynth/solver.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace xsynth;

namespace {

MatrixXd random_matrix(SplitMix64& rng, Eigen::Index m, Eigen::Index n) {
    MatrixXd out(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j) out(i, j) = rng.normal();
    return out;
}

} // namespace

TEST_CASE("exact representation is recovered") {
    SplitMix64 rng(42);
    VectorXd y = random_matrix(rng, 5, 1).col(0);
    MatrixXd X = y;
    WeightFit fit = constrained_least_squares(X, y, Simplex{});
    CHECK(fit.w[0] == Catch::Approx(1.0).margin(1e-9));
    CHECK(fit.objective < 1e-18);

    MatrixXd X3 = random_matrix(rng, 6, 3);
    WeightFit fit3 = constrained_least_squares(X3, X3.col(0), Simplex{});
    CHECK(fit3.w[0] == Catch::Approx(1.0).margin(1e-6));
    CHECK(fit3.w[1] == Catch::Approx(0.0).margin(1e-6));
    CHECK(fit3.w[2] == Catch::Approx(0.0).margin(1e-6));
    CHECK(fit3.objective < 1e-10);
}

TEST_CASE("random 6x2 simplex instance matches the 1-D grid oracle") {
    SplitMix64 rng(7);
    MatrixXd X = random_matrix(rng, 6, 2);
    VectorXd y = random_matrix(rng, 6, 1).col(0);
    WeightFit fit = constrained_least_squares(X, y, Simplex{});
    double grid = oracles::grid_simplex(X, y, 1e-5);
    CHECK(std::fabs(fit.objective - grid) <= 1e-6);
}

TEST_CASE("solver dominates grid oracles on small instances") {
    SplitMix64 rng(99);
    for (int trial = 0; trial < 30; ++trial) {
        Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.next() % 3);
        Eigen::Index m = 1 + static_cast<Eigen::Index>(rng.next() % 10);
        MatrixXd X = random_matrix(rng, m, n);
        VectorXd y = random_matrix(rng, m, 1).col(0);
        double q = 1.0 + rng.uniform();

        WeightFit sim = constrained_least_squares(X, y, Simplex{});
        CHECK(sim.objective <= oracles::grid_simplex(X, y, 0.01) + 1e-6);

        WeightFit ball = constrained_least_squares(X, y, L1Ball{q});
        CHECK(ball.objective <= oracles::grid_l1_ball(X, y, q, 0.02) + 1e-6);

        WeightFit affine = constrained_least_squares(X, y, L1BallAffine{q});
        CHECK(affine.objective <= oracles::grid_l1_affine(X, y, q, 0.02) + 1e-6);
    }
}

TEST_CASE("objective is invariant to column permutations") {
    SplitMix64 rng(1234);
    MatrixXd X = random_matrix(rng, 8, 4);
    VectorXd y = random_matrix(rng, 8, 1).col(0);
    MatrixXd Xp(8, 4);
    Xp << X.col(2), X.col(0), X.col(3), X.col(1);
    for (ConstraintSet c : {ConstraintSet(Simplex{}), ConstraintSet(L1Ball{1.0}),
                            ConstraintSet(L1BallAffine{1.5})}) {
        WeightFit a = constrained_least_squares(X, y, c);
        WeightFit b = constrained_least_squares(Xp, y, c);
        CHECK(a.objective == Catch::Approx(b.objective).margin(1e-9));
    }
}

TEST_CASE("fixed equal weights skip optimization") {
    SplitMix64 rng(5);
    MatrixXd X = random_matrix(rng, 7, 4);
    VectorXd y = random_matrix(rng, 7, 1).col(0);
    WeightFit fit = constrained_least_squares(X, y, FixedEqual{});
    CHECK(fit.iterations == 0);
    CHECK(fit.converged);
    for (int i = 0; i < 4; ++i) CHECK(fit.w[i] == 0.25);
    CHECK(fit.objective == Catch::Approx((y - X * fit.w).squaredNorm()));
}

TEST_CASE("solution never beats the feasible start in the wrong direction") {
    SplitMix64 rng(31337);
    for (int trial = 0; trial < 20; ++trial) {
        MatrixXd X = random_matrix(rng, 5, 3);
        VectorXd y = random_matrix(rng, 5, 1).col(0);
        for (ConstraintSet c : {ConstraintSet(Simplex{}), ConstraintSet(L1Ball{0.8}),
                                ConstraintSet(L1BallAffine{1.2})}) {
            VectorXd start = project(c, VectorXd::Zero(3));
            WeightFit fit = constrained_least_squares(X, y, c);
            CHECK(fit.objective <= (y - X * start).squaredNorm() + 1e-12);
        }
    }
}

TEST_CASE("solver input validation") {
    MatrixXd X(2, 2);
    X << 1, 2, 3, 4;
    VectorXd y(2);
    y << 1, std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(constrained_least_squares(X, y, Simplex{}), std::invalid_argument);
    VectorXd good(2);
    good << 1, 2;
    CHECK_THROWS_AS(constrained_least_squares(X, good, L1BallAffine{0.5}), std::invalid_argument);
}
