#include "certlab/distributions.hpp"

#include "certlab/statkernel.hpp"
#include "parse_util.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>

namespace certlab {

namespace {

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(fmt::format("{} must be positive and finite (got {})", what, v));
    }
}

void require_shape(double q) {
    require_positive(q, "shape q");
    if (q > kMaxShape) {
        throw std::invalid_argument(
            fmt::format("shape q = {} exceeds {}; use uniform-linf for the q -> inf limit", q, kMaxShape));
    }
}

}  // namespace

SmoothingDistribution SmoothingDistribution::generalized_gaussian(double q, double b) {
    require_shape(q);
    require_positive(b, "scale b");
    return SmoothingDistribution(GeneralizedGaussian{q, b});
}

SmoothingDistribution SmoothingDistribution::generalized_gaussian_sigma(double q, double sigma) {
    return generalized_gaussian(q, scale_from_sigma(q, sigma));
}

SmoothingDistribution SmoothingDistribution::uniform_linf(double b) {
    require_positive(b, "half-width b");
    return SmoothingDistribution(UniformLinf{b});
}

SmoothingDistribution SmoothingDistribution::uniform_l1(double b) {
    require_positive(b, "l1 radius b");
    return SmoothingDistribution(UniformL1{b});
}

SmoothingDistribution SmoothingDistribution::parse(std::string_view spec) {
    const auto colon = spec.find(':');
    if (colon == std::string_view::npos) {
        throw std::invalid_argument(fmt::format("distribution spec '{}' is missing ':'", spec));
    }
    const std::string_view family = spec.substr(0, colon);
    const auto kv = detail::parse_key_values(spec.substr(colon + 1));
    auto get = [&](const char* key) -> std::optional<double> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        return detail::parse_double(it->second, key);
    };
    auto reject_unknown = [&](std::initializer_list<const char*> allowed) {
        for (const auto& [k, v] : kv) {
            bool ok = false;
            for (const char* a : allowed) ok = ok || k == a;
            if (!ok) {
                throw std::invalid_argument(fmt::format("unknown key '{}' in distribution spec '{}'", k, spec));
            }
        }
    };
    const auto sigma = get("sigma");
    const auto b = get("b");
    if (sigma.has_value() == b.has_value()) {
        throw std::invalid_argument(
            fmt::format("distribution spec '{}' needs exactly one of sigma= or b=", spec));
    }
    if (family == "gengauss") {
        reject_unknown({"q", "sigma", "b"});
        const auto q = get("q");
        if (!q) throw std::invalid_argument(fmt::format("distribution spec '{}' needs q=", spec));
        return b ? generalized_gaussian(*q, *b) : generalized_gaussian_sigma(*q, *sigma);
    }
    if (family == "uniform-linf") {
        reject_unknown({"sigma", "b"});
        if (sigma) require_positive(*sigma, "sigma");
        return uniform_linf(b ? *b : std::sqrt(3.0) * *sigma);
    }
    if (family == "uniform-l1") {
        reject_unknown({"b"});
        if (!b) throw std::invalid_argument("uniform-l1 is parameterized by b only");
        return uniform_l1(*b);
    }
    throw std::invalid_argument(fmt::format("unknown distribution family '{}'", family));
}

bool SmoothingDistribution::is_gaussian() const {
    const auto* gg = std::get_if<GeneralizedGaussian>(&params_);
    return gg != nullptr && gg->q == 2.0;
}

std::optional<double> SmoothingDistribution::coordinate_sigma() const {
    if (const auto* gg = std::get_if<GeneralizedGaussian>(&params_)) {
        return sigma_from_scale(gg->q, gg->b);
    }
    if (const auto* u = std::get_if<UniformLinf>(&params_)) {
        return u->b / std::sqrt(3.0);
    }
    return std::nullopt;
}

std::string SmoothingDistribution::to_string() const {
    if (const auto* gg = std::get_if<GeneralizedGaussian>(&params_)) {
        return fmt::format("gengauss:q={},b={}", gg->q, gg->b);
    }
    if (const auto* u = std::get_if<UniformLinf>(&params_)) {
        return fmt::format("uniform-linf:b={}", u->b);
    }
    return fmt::format("uniform-l1:b={}", std::get<UniformL1>(params_).b);
}

double gengauss_normalizer(double q, double b) {
    require_shape(q);
    require_positive(b, "scale b");
    return 2.0 * b * std::exp(log_gamma(1.0 / q)) / q;
}

double sigma_from_scale(double q, double b) {
    require_shape(q);
    require_positive(b, "scale b");
    return b * std::exp(0.5 * (log_gamma(3.0 / q) - log_gamma(1.0 / q)));
}

double scale_from_sigma(double q, double sigma) {
    require_shape(q);
    require_positive(sigma, "sigma");
    return sigma * std::exp(0.5 * (log_gamma(1.0 / q) - log_gamma(3.0 / q)));
}

double even_moment(double q, double b, int n) {
    require_shape(q);
    require_positive(b, "scale b");
    if (n < 0 || n % 2 != 0) {
        throw std::invalid_argument(fmt::format("even_moment: n must be a nonnegative even integer (got {})", n));
    }
    if (n == 0) return 1.0;
    return std::exp(n * std::log(b) + log_gamma((n + 1.0) / q) - log_gamma(1.0 / q));
}

double log_density(const SmoothingDistribution& dist, std::span<const double> z) {
    for (double v : z) {
        if (!std::isfinite(v)) throw std::invalid_argument("log_density: non-finite coordinate");
    }
    const double d = static_cast<double>(z.size());
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    return std::visit(
        [&](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, GeneralizedGaussian>) {
                double acc = 0.0;
                for (double v : z) acc += std::pow(std::fabs(v) / p.b, p.q);
                return -acc - d * std::log(gengauss_normalizer(p.q, p.b));
            } else if constexpr (std::is_same_v<T, UniformLinf>) {
                for (double v : z) {
                    if (std::fabs(v) > p.b) return neg_inf;
                }
                return -d * std::log(2.0 * p.b);
            } else {
                double l1 = 0.0;
                for (double v : z) l1 += std::fabs(v);
                if (l1 > p.b) return neg_inf;
                return -(d * std::numbers::ln2 + d * std::log(p.b) - log_gamma(d + 1.0));
            }
        },
        dist.params());
}

double log_gamma_variate(double shape, RngStream& rng) {
    if (!(shape > 0.0) || !std::isfinite(shape)) throw std::invalid_argument("gamma shape must be positive");
    if (shape >= 1.0) {
        std::gamma_distribution<double> g(shape, 1.0);
        return std::log(g(rng));
    }
    // Gamma(a) = Gamma(a + 1) * U^(1/a)
    std::gamma_distribution<double> g(shape + 1.0, 1.0);
    const double boosted = std::log(g(rng));
    return boosted + std::log(rng.uniform_open()) / shape;
}

void sample_into(const SmoothingDistribution& dist, std::span<double> out, RngStream& rng) {
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, GeneralizedGaussian>) {
                if (p.q == 2.0) {
                    // Same law as the Gamma(1/2) transform, drawn directly.
                    std::normal_distribution<double> normal(0.0, p.b / std::numbers::sqrt2);
                    for (double& v : out) v = normal(rng);
                } else if (p.q == 1.0) {
                    for (double& v : out) {
                        const double mag = p.b * rng.exponential();
                        v = rng.coin() ? mag : -mag;
                    }
                } else {
                    const double shape = 1.0 / p.q;
                    for (double& v : out) {
                        const double mag = p.b * std::exp(log_gamma_variate(shape, rng) / p.q);
                        v = rng.coin() ? mag : -mag;
                    }
                }
            } else if constexpr (std::is_same_v<T, UniformLinf>) {
                for (double& v : out) v = p.b * (2.0 * rng.uniform_open() - 1.0);
            } else {
                double total = 0.0;
                for (double& v : out) {
                    const double mag = rng.exponential();
                    total += mag;
                    v = rng.coin() ? mag : -mag;
                }
                const double radius = p.b * std::pow(rng.uniform_open(), 1.0 / static_cast<double>(out.size()));
                const double scale = radius / total;
                for (double& v : out) v *= scale;
            }
        },
        dist.params());
}

NoiseSample sample(const SmoothingDistribution& dist, std::size_t d, RngStream& rng) {
    if (d == 0) throw std::invalid_argument("sample: dimension must be at least 1");
    NoiseSample s{std::vector<double>(d)};
    sample_into(dist, s.delta, rng);
    return s;
}

MgfCheck mgf_bound_check(double q, double b, double t) {
    if (!(q >= 1.0)) throw std::invalid_argument("mgf_bound_check: requires q >= 1");
    require_shape(q);
    require_positive(b, "scale b");
    require_positive(t, "t");
    const double sigma = sigma_from_scale(q, b);
    const double ratio = kMgfConstant * kMgfConstant * t * t * sigma * sigma;
    if (ratio >= 1.0) {
        throw std::invalid_argument(
            fmt::format("mgf_bound_check: c^2 t^2 sigma^2 = {} >= 1, geometric series diverges", ratio));
    }
    // E[exp(tZ)] = q / Gamma(1/q) * int_0^inf cosh(t b u) exp(-u^q) du
    const double tb = t * b;
    auto integrand = [&](double u) {
        const double uq = std::pow(u, q);
        return 0.5 * (std::exp(tb * u - uq) + std::exp(-tb * u - uq));
    };
    using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;
    constexpr double tol = 1e-14;
    double integral = Quad::integrate(integrand, 0.0, 1.0, 15, tol);
    integral += Quad::integrate(integrand, 1.0, 2.0, 15, tol);
    integral += Quad::integrate(integrand, 2.0, std::numeric_limits<double>::infinity(), 15, tol);
    const double lhs = q * std::exp(-log_gamma(1.0 / q)) * integral;
    const double rhs = 1.0 / (1.0 - ratio);
    return {lhs, rhs, lhs <= rhs + 1e-9};
}

double lemma1_constant(double q) {
    if (!(q >= 1.0)) throw std::invalid_argument("lemma1_constant: requires q >= 1");
    require_shape(q);
    return std::exp(0.5 * (log_gamma(1.0 / q) - log_gamma(3.0 / q)));
}

}  // namespace certlab
