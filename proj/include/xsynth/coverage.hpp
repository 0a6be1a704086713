#ifndef XSYNTH_COVERAGE_HPP
#define XSYNTH_COVERAGE_HPP

#include <atomic>
#include <charconv>
#include <cmath>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "xsynth/dgp.hpp"
#include "xsynth/inference.hpp"

namespace xsynth {

struct CoverageRow {
    std::string dgp_id;
    Method method = Method::sc;
    int k = 0;
    double coverage = 0.0;     // over non-degenerate replications
    double avg_length = 0.0;
    int reps = 0;
    int degenerate = 0;
    std::uint64_t seed = 0;
};

struct CoverageTable {
    std::vector<CoverageRow> rows;

    void write_csv(std::ostream& out) const {
        out << "dgp,method,K,coverage,avg_length,reps,degenerate,seed\n";
        auto fmt = [](double v) {
            if (std::isnan(v)) return std::string("nan");
            char buf[64];
            auto res = std::to_chars(buf, buf + sizeof(buf), v);
            return std::string(buf, res.ptr);
        };
        for (const auto& r : rows)
            out << r.dgp_id << ',' << to_string(r.method) << ',' << r.k << ',' << fmt(r.coverage)
                << ',' << fmt(r.avg_length) << ',' << r.reps << ',' << r.degenerate << ','
                << r.seed << '\n';
    }
};

/// Coverage and average CI length over `reps` synthetic panels, at the true
/// effect as the null. Replication j draws its panel from the stream
/// derive_seed(master_seed, j), so results do not depend on the number of
/// worker threads; aggregation runs in replication order. Replications with
/// a degenerate fold variance are tallied and excluded from the coverage
/// denominator.
inline CoverageTable run_coverage(const DgpConfig& dgp, const MuWSpec& spec,
                                  const std::string& dgp_id, const std::vector<Method>& methods,
                                  const std::vector<int>& k_values, int reps, double alpha,
                                  std::uint64_t master_seed, int threads = 1) {
    if (reps < 1) throw validation_error("reps must be >= 1");
    if (methods.empty() || k_values.empty()) throw validation_error("methods and k lists must be nonempty");
    dgp.validate();

    struct Cell {
        bool degenerate = false;
        bool covered = false;
        double length = 0.0;
    };
    const std::size_t n_cells = methods.size() * k_values.size();
    std::vector<std::vector<Cell>> results(static_cast<std::size_t>(reps),
                                           std::vector<Cell>(n_cells));

    auto run_rep = [&](int j) {
        Panel panel = generate_panel(dgp, spec, derive_seed(master_seed, static_cast<std::uint64_t>(j)));
        std::size_t cell = 0;
        for (Method m : methods) {
            for (int k : k_values) {
                EstimationConfig cfg;
                cfg.method = m;
                cfg.k_folds = k;
                cfg.alpha = alpha;
                cfg.tau0 = dgp.effect;
                Cell& slot = results[static_cast<std::size_t>(j)][cell++];
                try {
                    CrossFitResult res = crossfit_att(panel, cfg);
                    slot.covered = res.ci.first <= dgp.effect && dgp.effect <= res.ci.second;
                    slot.length = res.ci.second - res.ci.first;
                } catch (const degenerate_variance_error&) {
                    slot.degenerate = true;
                }
            }
        }
    };

    const int n_workers = std::max(1, threads);
    if (n_workers == 1) {
        for (int j = 0; j < reps; ++j) run_rep(j);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w)
            pool.emplace_back([&] {
                for (int j = next.fetch_add(1); j < reps; j = next.fetch_add(1)) run_rep(j);
            });
        for (auto& th : pool) th.join();
    }

    CoverageTable table;
    std::size_t cell = 0;
    for (Method m : methods) {
        for (int k : k_values) {
            CoverageRow row;
            row.dgp_id = dgp_id;
            row.method = m;
            row.k = k;
            row.reps = reps;
            row.seed = master_seed;
            long covered = 0;
            double total_len = 0.0;
            int ok = 0;
            for (int j = 0; j < reps; ++j) {
                const Cell& slot = results[static_cast<std::size_t>(j)][cell];
                if (slot.degenerate) {
                    ++row.degenerate;
                    continue;
                }
                ++ok;
                covered += slot.covered ? 1 : 0;
                total_len += slot.length;
            }
            row.coverage = ok > 0 ? static_cast<double>(covered) / ok
                                  : std::numeric_limits<double>::quiet_NaN();
            row.avg_length = ok > 0 ? total_len / ok : std::numeric_limits<double>::quiet_NaN();
            table.rows.push_back(std::move(row));
            ++cell;
        }
    }
    return table;
}

} // namespace xsynth

#endif
