#ifndef XSYNTH_DGP_HPP
#define XSYNTH_DGP_HPP

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "xsynth/estimators.hpp"
#include "xsynth/panel.hpp"
#include "xsynth/rng.hpp"

namespace xsynth {

/// Non-stationary component added to every control unit. Linear kinds use
/// theta = a + b*t; random-walk kinds start at 0 with innovation sd `sd`.
/// The *_sparse kinds put an extra copy of the component on control 1 only,
/// non_sparse_linear doubles the trend for controls 9..N, and the
/// heterogeneous kinds give unit i its own trend (i + i*t, or a drift-i walk).
struct TrendSpec {
    enum class Kind {
        none,
        common_linear,
        common_random_walk,
        linear_sparse,
        rw_sparse,
        heterogeneous_linear,
        heterogeneous_drift_rw,
        non_sparse_linear
    };
    Kind kind = Kind::none;
    double a = 0.0;
    double b = 0.0;
    double sd = 1.0;
};

inline std::string to_string(TrendSpec::Kind k) {
    switch (k) {
        case TrendSpec::Kind::none: return "none";
        case TrendSpec::Kind::common_linear: return "common_linear";
        case TrendSpec::Kind::common_random_walk: return "common_random_walk";
        case TrendSpec::Kind::linear_sparse: return "linear_sparse";
        case TrendSpec::Kind::rw_sparse: return "rw_sparse";
        case TrendSpec::Kind::heterogeneous_linear: return "heterogeneous_linear";
        case TrendSpec::Kind::heterogeneous_drift_rw: return "heterogeneous_drift_rw";
        case TrendSpec::Kind::non_sparse_linear: return "non_sparse_linear";
    }
    return "?";
}

inline TrendSpec::Kind trend_kind_from_string(const std::string& s) {
    using K = TrendSpec::Kind;
    for (K k : {K::none, K::common_linear, K::common_random_walk, K::linear_sparse, K::rw_sparse,
                K::heterogeneous_linear, K::heterogeneous_drift_rw, K::non_sparse_linear})
        if (to_string(k) == s) return k;
    throw validation_error("unknown trend kind '" + s + "'");
}

/// Which (mu, w) the treated equation uses. sc_fit / cl_fit take the
/// calibrated estimates stored in the DgpConfig; the rest are fixed forms.
struct MuWSpec {
    enum class Kind { sc_fit, cl_fit, did_like, ultra_sparse, misspec, two_point };
    Kind kind = Kind::sc_fit;
};

inline std::string to_string(MuWSpec::Kind k) {
    switch (k) {
        case MuWSpec::Kind::sc_fit: return "sc_fit";
        case MuWSpec::Kind::cl_fit: return "cl_fit";
        case MuWSpec::Kind::did_like: return "did_like";
        case MuWSpec::Kind::ultra_sparse: return "ultra_sparse";
        case MuWSpec::Kind::misspec: return "misspec";
        case MuWSpec::Kind::two_point: return "two_point";
    }
    return "?";
}

inline MuWSpec::Kind mu_w_kind_from_string(const std::string& s) {
    using K = MuWSpec::Kind;
    for (K k : {K::sc_fit, K::cl_fit, K::did_like, K::ultra_sparse, K::misspec, K::two_point})
        if (to_string(k) == s) return k;
    throw validation_error("unknown mu_w kind '" + s + "'");
}

/// Calibrated factor-model generator: four common factors, AR(1)
/// idiosyncratic noise per control, AR(1) error on the treated equation,
/// optional non-stationary trend, constant post-period effect.
struct DgpConfig {
    int n_units = 0;            // N controls
    Eigen::Index t0 = 0;
    Eigen::Index t1 = 0;
    Eigen::MatrixXd loadings;   // N x 4
    Eigen::MatrixXd sigma_f;    // 4 x 4, PSD
    Eigen::VectorXd ar_rho;     // N, |rho_i| < 1
    Eigen::VectorXd ar_sigma;   // N, innovation sds
    double rho_u = 0.0;
    double sigma_v = 0.0;
    Eigen::VectorXd sc_w;       // calibrated SC weights (used with mu = 0)
    double cl_mu = 0.0;
    Eigen::VectorXd cl_w;       // calibrated CL weights
    TrendSpec trend;
    double trend_a = 0.0;       // least-squares line through the raw control average
    double trend_b = 0.0;
    double effect = 0.0;

    void validate() const {
        if (n_units < 1) throw validation_error("dgp: n_units must be >= 1");
        if (t0 < 2 || t1 < 1) throw validation_error("dgp: need t0 >= 2 and t1 >= 1");
        if (loadings.rows() != n_units || loadings.cols() != 4)
            throw validation_error("dgp: loadings must be N x 4");
        if (sigma_f.rows() != 4 || sigma_f.cols() != 4)
            throw validation_error("dgp: sigma_f must be 4 x 4");
        if (!sigma_f.isApprox(sigma_f.transpose(), 1e-10))
            throw validation_error("dgp: sigma_f must be symmetric");
        if (ar_rho.size() != n_units || ar_sigma.size() != n_units)
            throw validation_error("dgp: ar_rho/ar_sigma must have length N");
        for (Eigen::Index i = 0; i < ar_rho.size(); ++i) {
            if (!(std::fabs(ar_rho[i]) < 1.0)) throw validation_error("dgp: |ar_rho| must be < 1");
            if (ar_sigma[i] < 0.0) throw validation_error("dgp: ar_sigma must be >= 0");
        }
        if (!(std::fabs(rho_u) < 1.0)) throw validation_error("dgp: |rho_u| must be < 1");
        if (sigma_v < 0.0) throw validation_error("dgp: sigma_v must be >= 0");
        if (sc_w.size() != n_units || cl_w.size() != n_units)
            throw validation_error("dgp: calibrated weight vectors must have length N");
        if (!(trend.sd > 0.0)) throw validation_error("dgp: trend sd must be positive");
    }
};

namespace detail {

/// AR(1) by least squares without intercept; innovation sd from the fit
/// residuals. Coefficients at or beyond the unit circle are clamped to
/// +/-0.99 so the generator stays stationary.
inline std::pair<double, double> ar1_fit(const Eigen::VectorXd& e, const char* what) {
    const Eigen::Index n = e.size();
    if (n < 3) throw numeric_error("ar1_fit: series too short");
    Eigen::VectorXd lag = e.head(n - 1);
    Eigen::VectorXd cur = e.tail(n - 1);
    double denom = lag.squaredNorm();
    double rho = denom > 0.0 ? lag.dot(cur) / denom : 0.0;
    if (std::fabs(rho) >= 1.0) {
        double clamped = rho > 0.0 ? 0.99 : -0.99;
        std::cerr << "warning: AR(1) fit for " << what << " gave rho=" << rho
                  << ", clamping to " << clamped << "\n";
        rho = clamped;
    }
    Eigen::VectorXd resid = cur - rho * lag;
    double sigma = std::sqrt(resid.squaredNorm() / static_cast<double>(n - 2));
    return {rho, sigma};
}

/// Cholesky factor with an eigenvalue-clamping fallback for semidefinite
/// covariances.
inline Eigen::MatrixXd psd_cholesky(const Eigen::MatrixXd& s) {
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    if (es.info() != Eigen::Success) throw numeric_error("invalid covariance matrix");
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    if (es.eigenvalues().minCoeff() < -1e-8 * std::max(1.0, es.eigenvalues().maxCoeff()))
        throw numeric_error("covariance matrix has a negative eigenvalue");
    return es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
}

} // namespace detail

/// Fit the generator to a panel. Steps: (1) de-trend every unit by the
/// cross-sectional mean of the controls; (2) extract four factors from the
/// column-demeaned de-trended controls by SVD, loadings by least squares,
/// sigma_f as the factor-score covariance; (3) AR(1) per control on the
/// factor residuals; (4) SC and CL fits on the de-trended pre-period for the
/// sc_fit / cl_fit variants; (5) AR(1) on the SC residuals for the treated
/// error; (6) least-squares line through the raw control average.
inline DgpConfig calibrate(const Panel& panel) {
    panel.validate();
    const Eigen::Index n = panel.n_controls();
    const Eigen::Index t = panel.n_periods();
    if (n < 5) throw validation_error("calibrate: need at least 5 control units for 4 factors");
    if (t < 10) throw validation_error("calibrate: need at least 10 periods");

    Eigen::MatrixXd X(t, n);
    Eigen::Index col = 0;
    for (Eigen::Index j = 0; j < panel.n_units(); ++j) {
        if (j == panel.treated_col) continue;
        X.col(col++) = panel.outcomes.col(j);
    }
    const Eigen::VectorXd y = panel.outcomes.col(panel.treated_col);

    const Eigen::VectorXd ctrl_mean = X.rowwise().mean();
    Eigen::MatrixXd D = X.colwise() - ctrl_mean;
    Eigen::VectorXd yd = y - ctrl_mean;

    const Eigen::RowVectorXd col_means = D.colwise().mean();
    Eigen::MatrixXd Dm = D.rowwise() - col_means;

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Dm, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd sv = svd.singularValues();
    if (sv.size() < 4 || sv[3] <= 1e-10 * sv[0])
        throw numeric_error("calibrate: de-trended controls have rank < 4");

    Eigen::MatrixXd factors = svd.matrixU().leftCols(4) * sv.head(4).asDiagonal();
    Eigen::MatrixXd loadings = svd.matrixV().leftCols(4);
    Eigen::MatrixXd eta = Dm - factors * loadings.transpose();

    DgpConfig cfg;
    cfg.n_units = static_cast<int>(n);
    cfg.t0 = panel.t0;
    cfg.t1 = panel.t1();
    cfg.loadings = loadings;

    Eigen::MatrixXd fc = factors.rowwise() - factors.colwise().mean();
    cfg.sigma_f = fc.transpose() * fc / static_cast<double>(t - 1);

    cfg.ar_rho.resize(n);
    cfg.ar_sigma.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        auto [rho, sigma] = detail::ar1_fit(eta.col(i), "control residual");
        cfg.ar_rho[i] = rho;
        cfg.ar_sigma[i] = sigma;
    }

    const Eigen::MatrixXd D_pre = D.topRows(panel.t0);
    const Eigen::VectorXd yd_pre = yd.head(panel.t0);
    WeightFit sc = fit_weights(Method::sc, D_pre, yd_pre, 0.0);
    WeightFit cl = fit_weights(Method::cl, D_pre, yd_pre, 1.0);
    cfg.sc_w = sc.w;
    cfg.cl_w = cl.w;
    cfg.cl_mu = cl.intercept.value_or(0.0);

    Eigen::VectorXd u = yd_pre - D_pre * sc.w;
    auto [rho_u, sigma_v] = detail::ar1_fit(u, "treated residual");
    cfg.rho_u = rho_u;
    cfg.sigma_v = sigma_v;

    // least-squares line m(t) ~ a + b*t over t = 1..T
    double tbar = 0.5 * static_cast<double>(t + 1);
    double mbar = ctrl_mean.mean();
    double sxx = 0.0, sxy = 0.0;
    for (Eigen::Index i = 0; i < t; ++i) {
        double dt = static_cast<double>(i + 1) - tbar;
        sxx += dt * dt;
        sxy += dt * (ctrl_mean[i] - mbar);
    }
    cfg.trend_b = sxy / sxx;
    cfg.trend_a = mbar - cfg.trend_b * tbar;
    cfg.trend.kind = TrendSpec::Kind::none;
    return cfg;
}

/// The (mu, w) pair a MuWSpec resolves to under a given configuration.
inline std::pair<double, Eigen::VectorXd> resolve_mu_w(const DgpConfig& cfg, const MuWSpec& spec) {
    const int n = cfg.n_units;
    switch (spec.kind) {
        case MuWSpec::Kind::sc_fit: return {0.0, cfg.sc_w};
        case MuWSpec::Kind::cl_fit: return {cfg.cl_mu, cfg.cl_w};
        case MuWSpec::Kind::did_like:
            return {1.0, Eigen::VectorXd::Constant(n, 1.0 / n)};
        case MuWSpec::Kind::ultra_sparse: {
            Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
            w[0] = -1.0;
            return {-1.0, w};
        }
        case MuWSpec::Kind::misspec: {
            Eigen::VectorXd w(n);
            for (int i = 0; i < n; ++i) w[i] = -static_cast<double>(i + 1) / n;
            return {-1.0, w};
        }
        case MuWSpec::Kind::two_point: {
            Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
            w[0] = 1.25;
            if (n > 1) w[1] = -0.25;
            return {0.0, w};
        }
    }
    throw validation_error("unreachable mu_w kind");
}

/// Draw one synthetic panel. Deterministic in (cfg, spec, seed): the draw
/// order is factors, then per-control AR noise, then the treated error,
/// then any trend innovations. AR processes start from their stationary
/// distribution. The treated unit sits in column 0.
inline Panel generate_panel(const DgpConfig& cfg, const MuWSpec& spec, std::uint64_t seed) {
    cfg.validate();
    const Eigen::Index n = cfg.n_units;
    const Eigen::Index t = cfg.t0 + cfg.t1;
    SplitMix64 rng(seed);

    const Eigen::MatrixXd chol_f = detail::psd_cholesky(cfg.sigma_f);
    Eigen::MatrixXd factors(t, 4);
    for (Eigen::Index row = 0; row < t; ++row) {
        Eigen::Vector4d z;
        for (int j = 0; j < 4; ++j) z[j] = rng.normal();
        factors.row(row) = (chol_f * z).transpose();
    }

    Eigen::MatrixXd eta(t, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double rho = cfg.ar_rho[i];
        double sd = cfg.ar_sigma[i];
        double prev = rng.normal() * sd / std::sqrt(1.0 - rho * rho);
        for (Eigen::Index row = 0; row < t; ++row) {
            prev = rho * prev + rng.normal() * sd;
            eta(row, i) = prev;
        }
    }

    Eigen::VectorXd u(t);
    {
        double prev = rng.normal() * cfg.sigma_v / std::sqrt(1.0 - cfg.rho_u * cfg.rho_u);
        for (Eigen::Index row = 0; row < t; ++row) {
            prev = cfg.rho_u * prev + rng.normal() * cfg.sigma_v;
            u[row] = prev;
        }
    }

    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(t, n);
    using K = TrendSpec::Kind;
    switch (cfg.trend.kind) {
        case K::none:
            break;
        case K::common_linear:
            for (Eigen::Index row = 0; row < t; ++row)
                theta.row(row).setConstant(cfg.trend.a + cfg.trend.b * static_cast<double>(row + 1));
            break;
        case K::common_random_walk: {
            double walk = 0.0;
            for (Eigen::Index row = 0; row < t; ++row) {
                walk += rng.normal() * cfg.trend.sd;
                theta.row(row).setConstant(walk);
            }
            break;
        }
        case K::linear_sparse:
            for (Eigen::Index row = 0; row < t; ++row) {
                double base = cfg.trend.a + cfg.trend.b * static_cast<double>(row + 1);
                theta.row(row).setConstant(base);
                theta(row, 0) += base;
            }
            break;
        case K::rw_sparse: {
            double walk = 0.0;
            for (Eigen::Index row = 0; row < t; ++row) {
                walk += rng.normal() * cfg.trend.sd;
                theta.row(row).setConstant(walk);
            }
            double sparse = 0.0;
            for (Eigen::Index row = 0; row < t; ++row) {
                sparse += rng.normal() * cfg.trend.sd;
                theta(row, 0) += sparse;
            }
            break;
        }
        case K::heterogeneous_linear:
            for (Eigen::Index i = 0; i < n; ++i) {
                double unit = static_cast<double>(i + 1);
                for (Eigen::Index row = 0; row < t; ++row)
                    theta(row, i) = unit + unit * static_cast<double>(row + 1);
            }
            break;
        case K::heterogeneous_drift_rw:
            for (Eigen::Index i = 0; i < n; ++i) {
                double drift = static_cast<double>(i + 1);
                double walk = 0.0;
                for (Eigen::Index row = 0; row < t; ++row) {
                    walk = drift + walk + rng.normal() * cfg.trend.sd;
                    theta(row, i) = walk;
                }
            }
            break;
        case K::non_sparse_linear:
            for (Eigen::Index row = 0; row < t; ++row) {
                double base = cfg.trend.a + cfg.trend.b * static_cast<double>(row + 1);
                for (Eigen::Index i = 0; i < n; ++i)
                    theta(row, i) = i + 1 > 8 ? 2.0 * base : base;
            }
            break;
    }

    Eigen::MatrixXd controls = theta + factors * cfg.loadings.transpose() + eta;
    auto [mu, w] = resolve_mu_w(cfg, spec);
    if (w.size() != n) throw validation_error("mu_w weight length does not match n_units");

    Panel p;
    p.outcomes.resize(t, n + 1);
    p.outcomes.col(0) = (controls * w).array() + mu + u.array();
    for (Eigen::Index row = cfg.t0; row < t; ++row) p.outcomes(row, 0) += cfg.effect;
    p.outcomes.rightCols(n) = controls;
    p.treated_col = 0;
    p.t0 = cfg.t0;
    p.times.resize(static_cast<std::size_t>(t));
    for (Eigen::Index row = 0; row < t; ++row) p.times[static_cast<std::size_t>(row)] = row + 1;
    p.unit_labels.push_back("treated");
    for (Eigen::Index i = 0; i < n; ++i) p.unit_labels.push_back("c" + std::to_string(i + 1));
    p.validate();
    return p;
}

/// The simulation designs: "1.1".."1.5" are stationary and differ in
/// (mu, w); "2.1".."2.9" add trend components. Linear trends reuse the
/// calibrated (a, b) line.
inline std::pair<TrendSpec, MuWSpec> dgp_catalog(const std::string& id, const DgpConfig& cfg) {
    TrendSpec none{};
    TrendSpec line{TrendSpec::Kind::common_linear, cfg.trend_a, cfg.trend_b, 1.0};
    using TK = TrendSpec::Kind;
    using MK = MuWSpec::Kind;
    if (id == "1.1") return {none, {MK::sc_fit}};
    if (id == "1.2") return {none, {MK::cl_fit}};
    if (id == "1.3") return {none, {MK::did_like}};
    if (id == "1.4") return {none, {MK::ultra_sparse}};
    if (id == "1.5") return {none, {MK::misspec}};
    if (id == "2.1") return {line, {MK::sc_fit}};
    if (id == "2.2") return {{TK::common_random_walk, 0.0, 0.0, 1.0}, {MK::sc_fit}};
    if (id == "2.3") return {{TK::linear_sparse, cfg.trend_a, cfg.trend_b, 1.0}, {MK::sc_fit}};
    if (id == "2.4") return {{TK::rw_sparse, 0.0, 0.0, 1.0}, {MK::sc_fit}};
    if (id == "2.5") return {{TK::heterogeneous_linear, 0.0, 0.0, 1.0}, {MK::sc_fit}};
    if (id == "2.6") return {{TK::heterogeneous_drift_rw, 0.0, 0.0, 1.0}, {MK::sc_fit}};
    if (id == "2.7") return {{TK::non_sparse_linear, cfg.trend_a, cfg.trend_b, 1.0}, {MK::sc_fit}};
    if (id == "2.8") return {line, {MK::two_point}};
    if (id == "2.9") return {line, {MK::misspec}};
    throw validation_error("unknown dgp id '" + id + "' (expected 1.1..1.5 or 2.1..2.9)");
}

inline nlohmann::json to_json(const DgpConfig& cfg) {
    nlohmann::json j;
    j["n_units"] = cfg.n_units;
    j["t0"] = static_cast<long long>(cfg.t0);
    j["t1"] = static_cast<long long>(cfg.t1);
    auto matrix = [](const Eigen::MatrixXd& m) {
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
            rows.push_back(row);
        }
        return rows;
    };
    auto vector = [](const Eigen::VectorXd& v) {
        return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
    };
    j["loadings"] = matrix(cfg.loadings);
    j["sigma_f"] = matrix(cfg.sigma_f);
    j["ar_rho"] = vector(cfg.ar_rho);
    j["ar_sigma"] = vector(cfg.ar_sigma);
    j["rho_u"] = cfg.rho_u;
    j["sigma_v"] = cfg.sigma_v;
    j["mu_w"] = {{"sc_w", vector(cfg.sc_w)}, {"cl_mu", cfg.cl_mu}, {"cl_w", vector(cfg.cl_w)}};
    j["trend"] = {{"kind", to_string(cfg.trend.kind)},
                  {"a", cfg.trend.a},
                  {"b", cfg.trend.b},
                  {"sd", cfg.trend.sd}};
    j["trend_line"] = {{"a", cfg.trend_a}, {"b", cfg.trend_b}};
    j["effect"] = cfg.effect;
    return j;
}

inline DgpConfig dgp_config_from_json(const nlohmann::json& j) {
    DgpConfig cfg;
    try {
        cfg.n_units = j.at("n_units").get<int>();
        cfg.t0 = j.at("t0").get<long long>();
        cfg.t1 = j.at("t1").get<long long>();
        auto matrix = [](const nlohmann::json& rows) {
            Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows[0].size());
            for (Eigen::Index i = 0; i < m.rows(); ++i)
                for (Eigen::Index c = 0; c < m.cols(); ++c)
                    m(i, c) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
            return m;
        };
        auto vector = [](const nlohmann::json& arr) {
            Eigen::VectorXd v(arr.size());
            for (Eigen::Index i = 0; i < v.size(); ++i)
                v[i] = arr[static_cast<std::size_t>(i)].get<double>();
            return v;
        };
        cfg.loadings = matrix(j.at("loadings"));
        cfg.sigma_f = matrix(j.at("sigma_f"));
        cfg.ar_rho = vector(j.at("ar_rho"));
        cfg.ar_sigma = vector(j.at("ar_sigma"));
        cfg.rho_u = j.at("rho_u").get<double>();
        cfg.sigma_v = j.at("sigma_v").get<double>();
        cfg.sc_w = vector(j.at("mu_w").at("sc_w"));
        cfg.cl_mu = j.at("mu_w").at("cl_mu").get<double>();
        cfg.cl_w = vector(j.at("mu_w").at("cl_w"));
        cfg.trend.kind = trend_kind_from_string(j.at("trend").at("kind").get<std::string>());
        cfg.trend.a = j.at("trend").at("a").get<double>();
        cfg.trend.b = j.at("trend").at("b").get<double>();
        cfg.trend.sd = j.at("trend").at("sd").get<double>();
        cfg.trend_a = j.at("trend_line").at("a").get<double>();
        cfg.trend_b = j.at("trend_line").at("b").get<double>();
        cfg.effect = j.at("effect").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(std::string("bad dgp config json: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

} // namespace xsynth

#endif
