#ifndef XSYNTH_INFERENCE_HPP
#define XSYNTH_INFERENCE_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "xsynth/estimators.hpp"
#include "xsynth/panel.hpp"
#include "xsynth/student_t.hpp"

namespace xsynth {

/// Where the K evaluation blocks sit in the pre-period. Both choices are
/// valid; `first` is the default everywhere, `last` exists for comparison
/// runs and is deliberately not exposed on the CLI.
enum class BlockPlacement { first, last };

/// K consecutive evaluation blocks of length r = min(floor(T0/K), T1) inside
/// the pre-period, plus the complementary training sets. Pre-period indices
/// not covered by any block land in every training set.
struct BlockScheme {
    int k = 0;
    Eigen::Index r = 0;
    std::vector<std::vector<Eigen::Index>> blocks;         // H_k, 0-based row indices
    std::vector<std::vector<Eigen::Index>> training_sets;  // {0..T0-1} \ H_k
};

inline BlockScheme build_blocks(Eigen::Index t0, Eigen::Index t1, int k,
                                BlockPlacement placement = BlockPlacement::first) {
    if (k < 2) throw validation_error("k must be >= 2");
    if (t0 < k) throw validation_error("t0 must be >= k");
    if (t1 < 1) throw validation_error("t1 must be >= 1");
    BlockScheme s;
    s.k = k;
    s.r = std::min<Eigen::Index>(t0 / k, t1);
    Eigen::Index offset = placement == BlockPlacement::first ? 0 : t0 - s.r * k;
    for (int j = 0; j < k; ++j) {
        std::vector<Eigen::Index> block;
        for (Eigen::Index i = 0; i < s.r; ++i) block.push_back(offset + j * s.r + i);
        s.blocks.push_back(std::move(block));
    }
    for (int j = 0; j < k; ++j) {
        std::vector<Eigen::Index> train;
        const auto& block = s.blocks[static_cast<std::size_t>(j)];
        for (Eigen::Index i = 0; i < t0; ++i)
            if (i < block.front() || i > block.back()) train.push_back(i);
        s.training_sets.push_back(std::move(train));
    }
    return s;
}

struct CrossFitResult {
    Method method = Method::sc;
    int k = 0;
    Eigen::Index r = 0;
    double alpha = 0.10;
    double tau0 = 0.0;
    std::vector<double> tau_k;
    double tau_hat = 0.0;
    double sigma_hat = 0.0;
    double t_stat = 0.0;
    int df = 0;
    double p_value = 0.0;
    std::pair<double, double> ci{0.0, 0.0};
    std::vector<WeightFit> fold_fits;
};

/// Fold estimates -> pooled ATT, scaled self-normalized dispersion,
/// t-statistic, two-sided p-value and symmetric confidence interval.
/// Throws degenerate_variance_error when the fold estimates coincide
/// (up to floating noise), since the statistic is undefined there.
inline CrossFitResult summarize_folds(std::vector<double> tau_k, Eigen::Index r, Eigen::Index t1,
                                      double alpha, double tau0) {
    const int k = static_cast<int>(tau_k.size());
    if (k < 2) throw validation_error("need at least 2 fold estimates");
    CrossFitResult res;
    res.k = k;
    res.r = r;
    res.alpha = alpha;
    res.tau0 = tau0;
    res.tau_k = std::move(tau_k);
    double sum = 0.0;
    for (double v : res.tau_k) sum += v;
    res.tau_hat = sum / k;
    double ss = 0.0;
    double scale = 1.0;
    for (double v : res.tau_k) {
        ss += (v - res.tau_hat) * (v - res.tau_hat);
        scale = std::max(scale, std::fabs(v));
    }
    double sd = std::sqrt(ss / (k - 1));
    if (sd <= 1e-12 * scale)
        throw degenerate_variance_error(res.tau_k, res.tau_hat);
    res.sigma_hat = std::sqrt(1.0 + static_cast<double>(k) * static_cast<double>(r)
                                        / static_cast<double>(t1)) * sd;
    res.df = k - 1;
    res.t_stat = std::sqrt(static_cast<double>(k)) * (res.tau_hat - tau0) / res.sigma_hat;
    res.p_value = 2.0 * (1.0 - t_cdf(std::fabs(res.t_stat), res.df));
    double half = t_quantile(1.0 - alpha / 2.0, res.df) * res.sigma_hat
                  / std::sqrt(static_cast<double>(k));
    res.ci = {res.tau_hat - half, res.tau_hat + half};
    return res;
}

/// Cross-fitted ATT on a panel: per fold, fit weights on the pre-period rows
/// outside the block, then difference the post-period and block residual
/// means. Weights never see the evaluation block or the post period.
inline CrossFitResult crossfit_att(const Panel& panel, const EstimationConfig& cfg,
                                   BlockPlacement placement = BlockPlacement::first) {
    panel.validate();
    cfg.validate();
    if (panel.t0 < cfg.k_folds) throw validation_error("k exceeds the number of pre-treatment periods");

    const PrePost data = split_pre_post(panel);
    const BlockScheme scheme = build_blocks(panel.t0, panel.t1(), cfg.k_folds, placement);
    const Eigen::Index n = data.pre.cols();

    std::vector<double> tau_k;
    std::vector<WeightFit> fits;
    for (int k = 0; k < cfg.k_folds; ++k) {
        const auto& train = scheme.training_sets[static_cast<std::size_t>(k)];
        Eigen::MatrixXd Xtr(static_cast<Eigen::Index>(train.size()), n);
        Eigen::VectorXd ytr(static_cast<Eigen::Index>(train.size()));
        for (std::size_t i = 0; i < train.size(); ++i) {
            Xtr.row(static_cast<Eigen::Index>(i)) = data.pre.row(train[i]);
            ytr[static_cast<Eigen::Index>(i)] = data.y_pre[train[i]];
        }
        WeightFit fit;
        try {
            fit = fit_weights(cfg.method, Xtr, ytr, cfg.resolved_q(), cfg.solver);
        } catch (const std::exception& e) {
            throw numeric_error("fold " + std::to_string(k + 1) + ": " + e.what());
        }

        const Eigen::VectorXd post_res = residuals(fit, data.post, data.y_post);
        const auto& block = scheme.blocks[static_cast<std::size_t>(k)];
        Eigen::MatrixXd Xbl(static_cast<Eigen::Index>(block.size()), n);
        Eigen::VectorXd ybl(static_cast<Eigen::Index>(block.size()));
        for (std::size_t i = 0; i < block.size(); ++i) {
            Xbl.row(static_cast<Eigen::Index>(i)) = data.pre.row(block[i]);
            ybl[static_cast<Eigen::Index>(i)] = data.y_pre[block[i]];
        }
        const Eigen::VectorXd block_res = residuals(fit, Xbl, ybl);
        tau_k.push_back(post_res.mean() - block_res.mean());
        fits.push_back(std::move(fit));
    }

    CrossFitResult res = summarize_folds(std::move(tau_k), scheme.r, panel.t1(), cfg.alpha, cfg.tau0);
    res.method = cfg.method;
    res.fold_fits = std::move(fits);
    return res;
}

/// g_{c0,K}: the block-variance factor in the limiting variance of the
/// pooled estimator, (min{c0,1} + g_{c0,K}/K) sigma^2.
inline double g_factor(double c0, int k) {
    if (k < 2) throw std::invalid_argument("g_factor: k must be >= 2");
    if (c0 < 0.0) throw std::invalid_argument("g_factor: c0 must be >= 0");
    if (c0 < 1.0) return static_cast<double>(k);
    if (c0 <= static_cast<double>(k)) return static_cast<double>(k) / c0;
    return 1.0;
}

/// Expected limiting length of the (1-alpha) interval as a function of K,
/// for pre/post ratio c0 and long-run sd sigma. The constant in front,
/// 2*sqrt(2)*sqrt(1+c0)*sigma, does not depend on K.
inline double expected_ci_length(int k, double alpha, double c0, double sigma) {
    if (k < 2) throw std::invalid_argument("expected_ci_length: k must be >= 2");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("expected_ci_length: alpha in (0,1)");
    if (c0 < 0.0) throw std::invalid_argument("expected_ci_length: c0 must be >= 0");
    if (!(sigma > 0.0)) throw std::invalid_argument("expected_ci_length: sigma must be positive");
    double c = 2.0 * std::sqrt(2.0) * std::sqrt(1.0 + c0) * sigma;
    double gamma_ratio = std::exp(std::lgamma(0.5 * k) - std::lgamma(0.5 * (k - 1)));
    return c * t_quantile(1.0 - alpha / 2.0, k - 1) * std::sqrt(1.0 / (k - 1)) * gamma_ratio;
}

/// Block t-test in the Gaussian location model: split y into K consecutive
/// blocks of length G = T/K, and self-normalize the grand block mean. Note
/// there is no sqrt(1 + Kr/T1) factor here.
inline std::pair<double, int> gaussian_location_tstat(const Eigen::VectorXd& y, int k) {
    if (k < 2) throw validation_error("k must be >= 2");
    const Eigen::Index t = y.size();
    if (t % k != 0) throw validation_error("series length must be divisible by k");
    const Eigen::Index g = t / k;
    std::vector<double> beta(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j)
        beta[static_cast<std::size_t>(j)] = y.segment(j * g, g).mean();
    double bar = 0.0;
    for (double b : beta) bar += b;
    bar /= k;
    double ss = 0.0;
    double scale = 1.0;
    for (double b : beta) {
        ss += (b - bar) * (b - bar);
        scale = std::max(scale, std::fabs(b));
    }
    double sd = std::sqrt(ss / (k - 1));
    if (sd <= 1e-12 * scale)
        throw degenerate_variance_error(beta, bar);
    return {std::sqrt(static_cast<double>(k)) * bar / sd, k - 1};
}

namespace detail {

/// Round to 6 significant digits for reporting.
inline double sig6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::strtod(buf, nullptr);
}

} // namespace detail

/// JSON report with 6 significant digits. When `degenerate`, the dispersion
/// fields are null but the point estimates are kept.
inline nlohmann::json to_json(const CrossFitResult& r, bool degenerate = false) {
    nlohmann::json j;
    j["method"] = to_string(r.method);
    j["K"] = r.k;
    j["r"] = static_cast<long long>(r.r);
    j["alpha"] = detail::sig6(r.alpha);
    j["tau0"] = detail::sig6(r.tau0);
    j["att"] = detail::sig6(r.tau_hat);
    nlohmann::json tk = nlohmann::json::array();
    for (double v : r.tau_k) tk.push_back(detail::sig6(v));
    j["tau_k"] = tk;
    j["df"] = r.df;
    if (degenerate) {
        j["sigma_hat"] = nullptr;
        j["t_stat"] = nullptr;
        j["p_value"] = nullptr;
        j["ci"] = {nullptr, nullptr};
    } else {
        j["sigma_hat"] = detail::sig6(r.sigma_hat);
        j["t_stat"] = detail::sig6(r.t_stat);
        j["p_value"] = detail::sig6(r.p_value);
        j["ci"] = {detail::sig6(r.ci.first), detail::sig6(r.ci.second)};
    }
    return j;
}

} // namespace xsynth

#endif
