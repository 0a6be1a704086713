#ifndef XSYNTH_PANEL_HPP
#define XSYNTH_PANEL_HPP

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "xsynth/errors.hpp"
#include "xsynth/solver.hpp"

namespace xsynth {

enum class Method { sc, cl, mcl, did };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::sc: return "sc";
        case Method::cl: return "cl";
        case Method::mcl: return "mcl";
        case Method::did: return "did";
    }
    return "?";
}

inline Method method_from_string(const std::string& s) {
    if (s == "sc") return Method::sc;
    if (s == "cl") return Method::cl;
    if (s == "mcl") return Method::mcl;
    if (s == "did") return Method::did;
    throw validation_error("unknown method '" + s + "' (expected sc|cl|mcl|did)");
}

/// A balanced outcome panel: one treated unit, N controls, T0 pre-treatment
/// rows. Immutable after construction; algorithms index by position and the
/// time labels are carried for reporting only.
struct Panel {
    std::vector<long long> times;     // strictly increasing, length T
    Eigen::MatrixXd outcomes;         // T x (N+1), units in columns
    Eigen::Index treated_col = 0;
    Eigen::Index t0 = 0;
    std::vector<std::string> unit_labels;

    Eigen::Index n_periods() const { return outcomes.rows(); }
    Eigen::Index n_units() const { return outcomes.cols(); }   // N + 1
    Eigen::Index n_controls() const { return outcomes.cols() - 1; }
    Eigen::Index t1() const { return n_periods() - t0; }

    void validate() const {
        if (n_units() < 2) throw validation_error("panel needs at least one control column");
        if (t0 < 2) throw validation_error("panel needs t0 >= 2 pre-treatment periods");
        if (t1() < 1) throw validation_error("panel needs at least one post-treatment period");
        if (treated_col < 0 || treated_col >= n_units())
            throw validation_error("treated column index out of range");
        if (static_cast<Eigen::Index>(times.size()) != n_periods())
            throw validation_error("time axis length does not match outcome rows");
        if (static_cast<Eigen::Index>(unit_labels.size()) != n_units())
            throw validation_error("unit label count does not match outcome columns");
        for (std::size_t i = 1; i < times.size(); ++i)
            if (times[i] <= times[i - 1]) throw validation_error("times must be strictly increasing");
        if (!outcomes.allFinite()) throw validation_error("panel contains non-finite entries");
    }
};

struct PrePost {
    Eigen::MatrixXd pre;     // T0 x N controls
    Eigen::VectorXd y_pre;   // T0 treated
    Eigen::MatrixXd post;    // T1 x N
    Eigen::VectorXd y_post;  // T1
};

/// Pre/post split with the treated column removed from the control block.
/// Control column order is preserved.
inline PrePost split_pre_post(const Panel& p) {
    p.validate();
    const Eigen::Index t = p.n_periods();
    const Eigen::Index n = p.n_controls();
    PrePost out;
    out.pre.resize(p.t0, n);
    out.post.resize(t - p.t0, n);
    Eigen::Index col = 0;
    for (Eigen::Index j = 0; j < p.n_units(); ++j) {
        if (j == p.treated_col) continue;
        out.pre.col(col) = p.outcomes.col(j).head(p.t0);
        out.post.col(col) = p.outcomes.col(j).tail(t - p.t0);
        ++col;
    }
    out.y_pre = p.outcomes.col(p.treated_col).head(p.t0);
    out.y_post = p.outcomes.col(p.treated_col).tail(t - p.t0);
    return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    return cells;
}

inline std::optional<double> parse_double(const std::string& s) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end != begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
    double value = 0.0;
    auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc{} || res.ptr != end || begin == end) return std::nullopt;
    if (!std::isfinite(value)) return std::nullopt;
    return value;
}

inline std::optional<long long> parse_time(const std::string& s) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end != begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
    long long value = 0;
    auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc{} || res.ptr != end || begin == end) return std::nullopt;
    return value;
}

/// Shortest decimal digits that round-trip the double exactly.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace detail

/// Parse a wide-format CSV panel: header `time,<label>,...`, one row per
/// period, `.` decimal separator. `treated` must match a header label and
/// 2 <= t0 < number of data rows. Cell errors name the offending data row
/// (1-based, excluding the header) and column label.
inline Panel load_panel(std::istream& in, const std::string& treated, Eigen::Index t0) {
    std::string line;
    if (!std::getline(in, line)) throw validation_error("empty input: missing header row");
    auto header = detail::split_csv_line(line);
    if (header.size() < 3 || header[0] != "time")
        throw validation_error("header must be `time,<label>,<label>,...` with at least two units");

    Panel p;
    p.unit_labels.assign(header.begin() + 1, header.end());
    const std::size_t n_units = p.unit_labels.size();

    Eigen::Index treated_col = -1;
    for (std::size_t j = 0; j < n_units; ++j) {
        if (p.unit_labels[j] == treated) {
            if (treated_col >= 0) throw validation_error("treated label '" + treated + "' is ambiguous");
            treated_col = static_cast<Eigen::Index>(j);
        }
    }
    if (treated_col < 0) throw validation_error("treated label '" + treated + "' not found in header");
    p.treated_col = treated_col;

    std::vector<std::vector<double>> rows;
    int row_no = 0;
    while (std::getline(in, line)) {
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        ++row_no;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != n_units + 1)
            throw validation_error("row " + std::to_string(row_no) + ": expected "
                                   + std::to_string(n_units + 1) + " cells, found "
                                   + std::to_string(cells.size()));
        auto tval = detail::parse_time(cells[0]);
        if (!tval)
            throw validation_error("row " + std::to_string(row_no) + ", column 'time': not an integer time label");
        p.times.push_back(*tval);
        std::vector<double> vals(n_units);
        for (std::size_t j = 0; j < n_units; ++j) {
            auto v = detail::parse_double(cells[j + 1]);
            if (!v)
                throw validation_error("row " + std::to_string(row_no) + ", column '"
                                       + p.unit_labels[j] + "': missing or non-numeric cell");
            vals[j] = *v;
        }
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw validation_error("no data rows");
    if (t0 < 2 || t0 >= static_cast<Eigen::Index>(rows.size()))
        throw validation_error("t0 must satisfy 2 <= t0 < " + std::to_string(rows.size()));

    p.t0 = t0;
    p.outcomes.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n_units));
    for (Eigen::Index i = 0; i < p.outcomes.rows(); ++i)
        for (Eigen::Index j = 0; j < p.outcomes.cols(); ++j)
            p.outcomes(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    p.validate();
    return p;
}

/// Re-serialize to the same CSV dialect, with shortest exact decimal
/// representation so load -> serialize -> load is an identity.
inline void serialize_panel(const Panel& p, std::ostream& out) {
    out << "time";
    for (const auto& label : p.unit_labels) out << ',' << label;
    out << '\n';
    for (Eigen::Index i = 0; i < p.n_periods(); ++i) {
        out << p.times[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < p.n_units(); ++j)
            out << ',' << detail::format_double(p.outcomes(i, j));
        out << '\n';
    }
}

/// Settings for one ATT estimation run.
struct EstimationConfig {
    Method method = Method::sc;
    int k_folds = 3;
    double alpha = 0.10;
    std::optional<double> q;   // l1 radius for cl/mcl; defaults below
    double tau0 = 0.0;
    SolverOptions solver;

    /// Per-method default radius: Q=1 for cl, Q=1.5 for mcl.
    double resolved_q() const {
        if (q) return *q;
        return method == Method::mcl ? 1.5 : 1.0;
    }

    void validate() const {
        if (k_folds < 2) throw validation_error("k must be >= 2");
        if (!(alpha > 0.0 && alpha < 1.0)) throw validation_error("alpha must lie in (0,1)");
        if (q && !(*q > 0.0)) throw validation_error("q must be positive");
        if (method == Method::mcl && resolved_q() < 1.0)
            throw validation_error("mcl needs q >= 1 (the feasible set is empty otherwise)");
    }
};

} // namespace xsynth

#endif
