#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <fstream>

#include "xsynth/dgp.hpp"
#include "xsynth/rng.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace xsynth;

namespace {

Panel load_fixture() {
    std::ifstream in(XSYNTH_DATA_DIR "/basque.csv");
    REQUIRE(in.good());
    return load_panel(in, "Basque", 15);
}

double median(VectorXd v) {
    std::sort(v.data(), v.data() + v.size());
    Eigen::Index n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

DgpConfig small_config(int n) {
    DgpConfig cfg;
    cfg.n_units = n;
    cfg.t0 = 10;
    cfg.t1 = 5;
    cfg.loadings = MatrixXd::Zero(n, 4);
    cfg.sigma_f = MatrixXd::Zero(4, 4);
    cfg.ar_rho = VectorXd::Zero(n);
    cfg.ar_sigma = VectorXd::Zero(n);
    cfg.rho_u = 0.0;
    cfg.sigma_v = 0.0;
    cfg.sc_w = VectorXd::Zero(n);
    cfg.sc_w[0] = 1.0;
    cfg.cl_w = VectorXd::Zero(n);
    cfg.cl_mu = 0.0;
    return cfg;
}

} // namespace

TEST_CASE("calibration of the application panel matches the reported persistence") {
    Panel p = load_fixture();
    DgpConfig cfg = calibrate(p);
    CHECK(cfg.n_units == 16);
    CHECK(cfg.t0 == 15);
    CHECK(cfg.t1 == 28);
    CHECK(median(cfg.ar_rho) == Catch::Approx(0.75).margin(0.05));
    CHECK(cfg.rho_u == Catch::Approx(0.64).margin(0.05));
    CHECK(cfg.sigma_v > 0.0);
    CHECK(cfg.sc_w.minCoeff() >= -1e-9);
    CHECK(cfg.sc_w.sum() == Catch::Approx(1.0).margin(1e-8));
    CHECK(cfg.cl_w.lpNorm<1>() <= 1.0 + 1e-8);
    CHECK(cfg.trend_b > 0.0);  // per-capita GDP trends upward
}

TEST_CASE("a noiseless four-factor panel is recovered exactly") {
    SplitMix64 rng(4242);
    const int n = 8;
    DgpConfig truth = small_config(n);
    truth.t0 = 20;
    truth.t1 = 10;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < 4; ++j) truth.loadings(i, j) = rng.normal();
    truth.sigma_f = MatrixXd::Zero(4, 4);
    truth.sigma_f.diagonal() << 2.0, 1.0, 0.5, 0.25;

    Panel p = generate_panel(truth, MuWSpec{MuWSpec::Kind::sc_fit}, 7);
    DgpConfig fitted = calibrate(p);

    // the de-trended controls are exactly rank 4, so the fitted factor model
    // reconstructs them to numerical precision
    MatrixXd X(p.n_periods(), n);
    Eigen::Index col = 0;
    for (Eigen::Index j = 0; j < p.n_units(); ++j) {
        if (j == p.treated_col) continue;
        X.col(col++) = p.outcomes.col(j);
    }
    MatrixXd D = X.colwise() - X.rowwise().mean().eval();
    MatrixXd Dm = D.rowwise() - D.colwise().mean().eval();
    Eigen::JacobiSVD<MatrixXd> svd(Dm);
    CHECK(svd.singularValues()[4] < 1e-8);
    for (Eigen::Index i = 0; i < fitted.ar_sigma.size(); ++i)
        CHECK(fitted.ar_sigma[i] < 1e-6);

    // total common-component variance is preserved up to rotation
    MatrixXd fitted_common = fitted.loadings * fitted.sigma_f * fitted.loadings.transpose();
    MatrixXd sample_cov = Dm.transpose() * Dm / static_cast<double>(Dm.rows() - 1);
    CHECK(fitted_common.trace() == Catch::Approx(sample_cov.trace()).epsilon(1e-8));
}

TEST_CASE("white noise calibrates to low persistence") {
    SplitMix64 rng(1111);
    Panel p;
    const Eigen::Index t = 60, units = 9;
    p.outcomes.resize(t, units);
    for (Eigen::Index i = 0; i < t; ++i)
        for (Eigen::Index j = 0; j < units; ++j) p.outcomes(i, j) = rng.normal();
    p.t0 = 30;
    p.treated_col = 0;
    for (Eigen::Index i = 0; i < t; ++i) p.times.push_back(i + 1);
    for (Eigen::Index j = 0; j < units; ++j) p.unit_labels.push_back("u" + std::to_string(j));
    DgpConfig cfg = calibrate(p);
    for (Eigen::Index i = 0; i < cfg.ar_rho.size(); ++i) CHECK(std::fabs(cfg.ar_rho[i]) < 0.3);
}

TEST_CASE("generation is deterministic in the seed") {
    Panel p = load_fixture();
    DgpConfig cfg = calibrate(p);
    Panel a = generate_panel(cfg, MuWSpec{MuWSpec::Kind::sc_fit}, 987);
    Panel b = generate_panel(cfg, MuWSpec{MuWSpec::Kind::sc_fit}, 987);
    CHECK(a.outcomes == b.outcomes);
    Panel c = generate_panel(cfg, MuWSpec{MuWSpec::Kind::sc_fit}, 988);
    CHECK(a.outcomes != c.outcomes);
}

TEST_CASE("degenerate noise collapses the treated unit onto control 1") {
    DgpConfig cfg = small_config(5);
    cfg.sigma_f.diagonal().setConstant(1.0);
    SplitMix64 rng(31);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 4; ++j) cfg.loadings(i, j) = rng.normal();
    Panel p = generate_panel(cfg, MuWSpec{MuWSpec::Kind::sc_fit}, 55);  // w = e1, mu = 0
    CHECK(p.outcomes.col(0) == p.outcomes.col(1));
}

TEST_CASE("heterogeneous linear trends are exact") {
    DgpConfig cfg = small_config(3);
    cfg.trend.kind = TrendSpec::Kind::heterogeneous_linear;
    Panel p = generate_panel(cfg, MuWSpec{MuWSpec::Kind::sc_fit}, 9);
    for (Eigen::Index t = 0; t < p.n_periods(); ++t)
        for (int i = 1; i <= 3; ++i)
            CHECK(p.outcomes(t, i) == Catch::Approx(i + i * static_cast<double>(t + 1)).margin(1e-12));
}

TEST_CASE("ar noise starts from its stationary distribution") {
    DgpConfig cfg = small_config(1);
    cfg.t0 = 60000;
    cfg.t1 = 40000;
    cfg.ar_rho[0] = 0.8;
    cfg.ar_sigma[0] = 0.5;
    Panel p = generate_panel(cfg, MuWSpec{MuWSpec::Kind::sc_fit}, 1001);
    VectorXd series = p.outcomes.col(1);
    double mean = series.mean();
    double var = (series.array() - mean).square().sum() / (series.size() - 1);
    double target = 0.25 / (1.0 - 0.64);
    CHECK(var == Catch::Approx(target).epsilon(0.03));
}

TEST_CASE("dgp config json round-trips") {
    Panel p = load_fixture();
    DgpConfig cfg = calibrate(p);
    nlohmann::json j = to_json(cfg);
    DgpConfig back = dgp_config_from_json(j);
    CHECK(to_json(back).dump() == j.dump());
    CHECK(back.sc_w == cfg.sc_w);
    CHECK(back.sigma_f == cfg.sigma_f);
}

TEST_CASE("dgp catalog wires trends and treated equations") {
    Panel p = load_fixture();
    DgpConfig cfg = calibrate(p);
    auto [trend11, spec11] = dgp_catalog("1.1", cfg);
    CHECK(trend11.kind == TrendSpec::Kind::none);
    CHECK(spec11.kind == MuWSpec::Kind::sc_fit);
    auto [trend23, spec23] = dgp_catalog("2.3", cfg);
    CHECK(trend23.kind == TrendSpec::Kind::linear_sparse);
    CHECK(trend23.a == cfg.trend_a);
    auto [trend28, spec28] = dgp_catalog("2.8", cfg);
    CHECK(spec28.kind == MuWSpec::Kind::two_point);
    auto [mu, w] = resolve_mu_w(cfg, spec28);
    CHECK(mu == 0.0);
    CHECK(w[0] == 1.25);
    CHECK(w[1] == -0.25);
    CHECK(w.sum() == Catch::Approx(1.0).margin(1e-12));
    CHECK_THROWS_AS(dgp_catalog("3.1", cfg), validation_error);
}

TEST_CASE("config validation rejects unstable processes") {
    DgpConfig cfg = small_config(3);
    cfg.ar_rho[1] = 1.0;
    CHECK_THROWS_AS(cfg.validate(), validation_error);
    cfg = small_config(3);
    cfg.rho_u = -1.2;
    CHECK_THROWS_AS(cfg.validate(), validation_error);
    cfg = small_config(3);
    cfg.loadings = MatrixXd::Zero(3, 3);
    CHECK_THROWS_AS(cfg.validate(), validation_error);
}
