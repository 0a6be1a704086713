// Command-line front end: estimate effects on real panels, calibrate the
// factor-model generator, run coverage campaigns, and tabulate the
// expected-length curve.
//
// Exit codes: 0 ok, 2 validation error, 3 degenerate fold variance,
// 4 numeric failure.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "xsynth/xsynth.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitNumeric = 4;

xsynth::Panel read_panel(const std::string& path, const std::string& treated, int t0) {
    std::ifstream in(path);
    if (!in.good()) throw xsynth::validation_error("cannot open panel file '" + path + "'");
    return xsynth::load_panel(in, treated, t0);
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void print_table(const xsynth::CrossFitResult& r) {
    std::printf("%-6s %2s %3s %10s %22s %10s %10s\n", "method", "K", "r", "ATT", "CI", "t-stat",
                "p-value");
    std::printf("%-6s %2d %3lld %10.4f [%9.4f, %9.4f] %10.4f %10.4f\n",
                xsynth::to_string(r.method).c_str(), r.k, static_cast<long long>(r.r), r.tau_hat,
                r.ci.first, r.ci.second, r.t_stat, r.p_value);
}

int cmd_estimate(const std::string& panel_path, const std::string& treated, int t0,
                 const std::string& method, int k, double alpha, double q_flag, bool q_set,
                 double tau0, bool as_json) {
    xsynth::Panel panel = read_panel(panel_path, treated, t0);
    xsynth::EstimationConfig cfg;
    cfg.method = xsynth::method_from_string(method);
    cfg.k_folds = k;
    cfg.alpha = alpha;
    if (q_set) cfg.q = q_flag;
    cfg.tau0 = tau0;
    try {
        xsynth::CrossFitResult r = xsynth::crossfit_att(panel, cfg);
        if (as_json)
            std::cout << xsynth::to_json(r).dump(2) << "\n";
        else
            print_table(r);
        return 0;
    } catch (const xsynth::degenerate_variance_error& e) {
        if (as_json) {
            xsynth::CrossFitResult r;
            r.method = cfg.method;
            r.k = cfg.k_folds;
            r.r = xsynth::build_blocks(panel.t0, panel.t1(), cfg.k_folds).r;
            r.alpha = cfg.alpha;
            r.tau0 = cfg.tau0;
            r.tau_k = e.tau_k;
            r.tau_hat = e.tau_hat;
            r.df = cfg.k_folds - 1;
            std::cout << xsynth::to_json(r, /*degenerate=*/true).dump(2) << "\n";
        } else {
            std::printf("ATT %.6g\n", e.tau_hat);
            std::fprintf(stderr, "degenerate variance: all fold estimates are identical; "
                                 "no interval is reported\n");
        }
        return kExitDegenerate;
    }
}

int cmd_calibrate(const std::string& panel_path, const std::string& treated, int t0,
                  const std::string& out_path) {
    xsynth::Panel panel = read_panel(panel_path, treated, t0);
    xsynth::DgpConfig cfg = xsynth::calibrate(panel);
    std::ofstream out(out_path);
    if (!out.good()) throw xsynth::validation_error("cannot write '" + out_path + "'");
    out << xsynth::to_json(cfg).dump(2) << "\n";

    Eigen::VectorXd rho = cfg.ar_rho;
    std::sort(rho.data(), rho.data() + rho.size());
    double med = rho.size() % 2 == 1 ? rho[rho.size() / 2]
                                     : 0.5 * (rho[rho.size() / 2 - 1] + rho[rho.size() / 2]);
    std::fprintf(stderr, "calibrated %d controls over %lld periods: median rho = %.3f, "
                         "rho_u = %.3f, sigma_v = %.4f\n",
                 cfg.n_units, static_cast<long long>(cfg.t0 + cfg.t1), med, cfg.rho_u,
                 cfg.sigma_v);
    return 0;
}

int cmd_simulate(const std::string& dgp_id, const std::string& calib_path,
                 const std::string& methods_csv, const std::string& k_csv, int reps, double alpha,
                 std::uint64_t seed, const std::string& out_path, int threads, int t0_override) {
    std::ifstream in(calib_path);
    if (!in.good()) throw xsynth::validation_error("cannot open calibration file '" + calib_path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw xsynth::validation_error(std::string("bad calibration json: ") + e.what());
    }
    xsynth::DgpConfig cfg = xsynth::dgp_config_from_json(j);
    auto [trend, spec] = xsynth::dgp_catalog(dgp_id, cfg);
    cfg.trend = trend;
    if (t0_override > 0) cfg.t0 = t0_override;

    std::vector<xsynth::Method> methods;
    for (const auto& name : split_list(methods_csv)) methods.push_back(xsynth::method_from_string(name));
    std::vector<int> ks;
    for (const auto& item : split_list(k_csv)) ks.push_back(std::stoi(item));
    if (methods.empty() || ks.empty())
        throw xsynth::validation_error("--methods and --k must be nonempty lists");

    xsynth::CoverageTable table =
        xsynth::run_coverage(cfg, spec, dgp_id, methods, ks, reps, alpha, seed, threads);
    std::ofstream out(out_path, std::ios::binary);
    if (!out.good()) throw xsynth::validation_error("cannot write '" + out_path + "'");
    table.write_csv(out);
    return 0;
}

int cmd_curve(int t0, int t1, double alpha, double sigma, int kmax, const std::string& out_path) {
    if (t0 < 1 || t1 < 1) throw xsynth::validation_error("t0 and t1 must be positive");
    if (kmax < 2) throw xsynth::validation_error("kmax must be >= 2");
    double c0 = static_cast<double>(t0) / static_cast<double>(t1);
    std::ofstream out(out_path);
    if (!out.good()) throw xsynth::validation_error("cannot write '" + out_path + "'");
    out << "K,expected_length\n";
    char buf[64];
    for (int k = 2; k <= kmax; ++k) {
        double v = xsynth::expected_ci_length(k, alpha, c0, sigma);
        std::snprintf(buf, sizeof(buf), "%.6g", v);
        out << k << ',' << buf << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cross-fitted t-test inference for synthetic-control-type estimators"};
    app.require_subcommand(1);

    // estimate
    auto* est = app.add_subcommand("estimate", "Estimate the ATT on a panel CSV");
    std::string panel_path, treated, method = "sc";
    int t0 = 0, k = 3;
    double alpha = 0.10, q_flag = 0.0, tau0 = 0.0;
    bool as_json = false, as_table = false;
    est->add_option("--panel", panel_path, "wide CSV panel file")->required();
    est->add_option("--treated", treated, "treated unit's column label")->required();
    est->add_option("--t0", t0, "number of pre-treatment periods")->required();
    est->add_option("--method", method, "sc|cl|mcl|did")->required();
    est->add_option("--k", k, "number of cross-fitting folds (default 3)");
    est->add_option("--alpha", alpha, "significance level (default 0.10)");
    auto* q_opt = est->add_option("--q", q_flag, "l1 radius for cl/mcl (defaults: cl 1, mcl 1.5)");
    est->add_option("--tau0", tau0, "null ATT for the test (default 0)");
    est->add_flag("--json", as_json, "emit JSON");
    est->add_flag("--table", as_table, "emit an aligned table (default)");

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "Fit the factor-model generator to a panel");
    std::string cal_panel, cal_treated, cal_out;
    int cal_t0 = 0;
    cal->add_option("--panel", cal_panel, "wide CSV panel file")->required();
    cal->add_option("--treated", cal_treated, "treated unit's column label")->required();
    cal->add_option("--t0", cal_t0, "number of pre-treatment periods")->required();
    cal->add_option("--out", cal_out, "output JSON path")->required();

    // simulate
    auto* sim = app.add_subcommand("simulate", "Run a coverage experiment for one design");
    std::string dgp_id, calib_path, methods_csv, k_csv, sim_out;
    int reps = 2000, threads = 1, sim_t0 = 0;
    double sim_alpha = 0.10;
    std::uint64_t seed = 1;
    sim->add_option("--dgp", dgp_id, "design id: 1.1..1.5 or 2.1..2.9")->required();
    sim->add_option("--calib", calib_path, "calibration JSON from `calibrate`")->required();
    sim->add_option("--methods", methods_csv, "comma list of sc|cl|mcl|did")->required();
    sim->add_option("--k", k_csv, "comma list of fold counts")->required();
    sim->add_option("--reps", reps, "replications (default 2000)");
    sim->add_option("--alpha", sim_alpha, "significance level (default 0.10)");
    sim->add_option("--seed", seed, "master seed (default 1)");
    sim->add_option("--out", sim_out, "output CSV path")->required();
    sim->add_option("--threads", threads, "worker threads (default 1)");
    sim->add_option("--t0", sim_t0, "override the calibrated pre-period length");

    // curve
    auto* cur = app.add_subcommand("curve", "Expected CI length as a function of K");
    int cur_t0 = 0, cur_t1 = 0, kmax = 0;
    double cur_alpha = 0.10, sigma = 1.0;
    std::string cur_out;
    cur->add_option("--t0", cur_t0, "pre-treatment periods")->required();
    cur->add_option("--t1", cur_t1, "post-treatment periods")->required();
    cur->add_option("--alpha", cur_alpha, "significance level (default 0.10)");
    cur->add_option("--sigma", sigma, "long-run standard deviation (default 1)");
    cur->add_option("--kmax", kmax, "largest K to tabulate")->required();
    cur->add_option("--out", cur_out, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (est->parsed())
            return cmd_estimate(panel_path, treated, t0, method, k, alpha, q_flag,
                                q_opt->count() > 0, tau0, as_json && !as_table);
        if (cal->parsed()) return cmd_calibrate(cal_panel, cal_treated, cal_t0, cal_out);
        if (sim->parsed())
            return cmd_simulate(dgp_id, calib_path, methods_csv, k_csv, reps, sim_alpha, seed,
                                sim_out, threads, sim_t0);
        if (cur->parsed()) return cmd_curve(cur_t0, cur_t1, cur_alpha, sigma, kmax, cur_out);
    } catch (const xsynth::validation_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const xsynth::numeric_error& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumeric;
    }
    return 0;
}
