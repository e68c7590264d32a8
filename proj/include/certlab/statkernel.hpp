#pragma once

#include <cstdint>

namespace certlab {

/// One-sided error probability for a confidence bound (0.001 means 99.9%).
class ConfidenceLevel {
public:
    explicit ConfidenceLevel(double alpha);

    double alpha() const { return alpha_; }

private:
    double alpha_;
};

// Standard normal CDF. Absolute error is at the level of double rounding.
double std_normal_cdf(double z);

// Standard normal density.
double std_normal_pdf(double z);

/// Inverse of the standard normal CDF on the open interval (0, 1).
///
/// Wichura's AS241 rational approximation followed by a single Newton step
/// against std_normal_cdf. The upper half is evaluated through the lower
/// tail so that inv_cdf(1 - p) == -inv_cdf(p) whenever 1 - p is exact.
double std_normal_inv_cdf(double p);

double log_gamma(double x);

/// Regularized incomplete beta I_x(a, b).
double reg_inc_beta(double a, double b, double x);

/// Exact (Clopper-Pearson) one-sided lower confidence bound for a binomial
/// proportion with k successes out of n trials.
///
/// Returns the p that solves P(Binomial(n, p) >= k) = alpha, found by
/// bisection on I_p(k, n - k + 1). The two closed-form endpoints (k = 0 and
/// k = n) are returned directly.
double clopper_pearson_lower(std::uint64_t k, std::uint64_t n, ConfidenceLevel level);

// Standard error of a binomial proportion estimate.
double binomial_stderr(double p, std::uint64_t n);

}  // namespace certlab
