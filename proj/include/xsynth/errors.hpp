#ifndef XSYNTH_ERRORS_HPP
#define XSYNTH_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace xsynth {

/// Bad user input: malformed files, out-of-range flags, infeasible settings.
class validation_error : public std::runtime_error {
public:
    explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: non-convergence, rank deficiency, invalid covariance.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// All fold estimates coincide, so the self-normalized statistic is undefined.
/// Carries the fold estimates so callers can still report the point estimate.
class degenerate_variance_error : public std::runtime_error {
public:
    degenerate_variance_error(std::vector<double> tau_k_, double tau_hat_)
        : std::runtime_error("degenerate variance: all fold estimates are identical"),
          tau_k(std::move(tau_k_)), tau_hat(tau_hat_) {}

    std::vector<double> tau_k;
    double tau_hat;
};

} // namespace xsynth

#endif
