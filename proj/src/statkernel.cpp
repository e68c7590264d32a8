#include "certlab/statkernel.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace certlab {

namespace {

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw std::invalid_argument(std::string(what) + ": argument must be finite");
    }
}

// AS241 (PPND16), valid for 0 < p <= 0.5 here; returns a value <= 0.
double ppnd16_lower(double p) {
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2509.0809287301226727 * r + 33430.575583588128105) * r +
                     67265.770927008700853) * r + 45921.953931549871457) * r +
                   13731.693765509461125) * r + 1971.5909503065514427) * r +
                 133.14166789178437745) * r + 3.387132872796366608) /
               (((((((5226.495278852545925 * r + 28729.085735721942674) * r +
                     39307.89580009271061) * r + 21213.794301586595867) * r +
                   5394.1960214247511077) * r + 687.1870074920579083) * r +
                 42.313330701600911252) * r + 1.0);
    }
    double r = std::sqrt(-std::log(p));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r +
                    0.24178072517745061177) * r + 1.27045825245236838258) * r +
                  3.64784832476320460504) * r + 5.7694972214606914055) * r +
                4.6303378461565452959) * r + 1.42343711074968357734) /
              (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r +
                    0.0151986665636164571966) * r + 0.14810397642748007459) * r +
                  0.68976733498510000455) * r + 1.6763848301838038494) * r +
                2.05319162663775882187) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    0.0012426609473880784386) * r + 0.026532189526576123093) * r +
                  0.29656057182850489123) * r + 1.7848265399172913358) * r +
                5.4637849111641143699) * r + 6.6579046435011037772) /
              (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r +
                    1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
                  0.0148753612908506148525) * r + 0.13692988092273580531) * r +
                0.59983220655588793769) * r + 1.0);
    }
    return -val;
}

}  // namespace

ConfidenceLevel::ConfidenceLevel(double alpha) : alpha_(alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("confidence level: alpha must lie in (0, 1)");
    }
}

double std_normal_cdf(double z) {
    require_finite(z, "std_normal_cdf");
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double std_normal_pdf(double z) {
    constexpr double inv_sqrt_2pi = 0.3989422804014326779399461;
    return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

double std_normal_inv_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::invalid_argument("std_normal_inv_cdf: p must lie in (0, 1)");
    }
    if (p > 0.5) {
        return -std_normal_inv_cdf(1.0 - p);
    }
    double z = ppnd16_lower(p);
    const double density = std_normal_pdf(z);
    if (density > 0.0) {
        z -= (std_normal_cdf(z) - p) / density;
    }
    return z;
}

double log_gamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw std::invalid_argument("log_gamma: x must be positive and finite");
    }
    return boost::math::lgamma(x);
}

double reg_inc_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
        throw std::invalid_argument("reg_inc_beta: a and b must be positive");
    }
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::invalid_argument("reg_inc_beta: x must lie in [0, 1]");
    }
    return boost::math::ibeta(a, b, x);
}

double clopper_pearson_lower(std::uint64_t k, std::uint64_t n, ConfidenceLevel level) {
    if (n == 0) {
        throw std::invalid_argument("clopper_pearson_lower: n must be at least 1");
    }
    if (k > n) {
        throw std::invalid_argument("clopper_pearson_lower: k must not exceed n");
    }
    const double alpha = level.alpha();
    if (k == 0) {
        return 0.0;
    }
    if (k == n) {
        return std::pow(alpha, 1.0 / static_cast<double>(n));
    }
    // P(Bin(n, p) >= k) = I_p(k, n - k + 1), increasing in p.
    const double a = static_cast<double>(k);
    const double b = static_cast<double>(n - k + 1);
    double lo = 0.0;
    double hi = static_cast<double>(k) / static_cast<double>(n);
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (boost::math::ibeta(a, b, mid) > alpha) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return lo;
}

double binomial_stderr(double p, std::uint64_t n) {
    if (n == 0) {
        throw std::invalid_argument("binomial_stderr: n must be at least 1");
    }
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial_stderr: p must lie in [0, 1]");
    return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

}  // namespace certlab
