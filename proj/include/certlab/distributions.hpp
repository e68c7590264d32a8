#pragma once

#include "certlab/rng.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace certlab {

// Density proportional to exp(-(|z|/b)^q), i.i.d. per coordinate.
struct GeneralizedGaussian {
    double q;
    double b;
};

// Uniform over [-b, b]^d.
struct UniformLinf {
    double b;
};

// Uniform over the l1 ball of radius b; coordinates are dependent.
struct UniformL1 {
    double b;
};

/// Largest generalized Gaussian shape accepted. Beyond it Gamma(1/q)
/// degenerates; use UniformLinf for the q -> infinity limit.
inline constexpr double kMaxShape = 1e6;

class SmoothingDistribution {
public:
    using Params = std::variant<GeneralizedGaussian, UniformLinf, UniformL1>;

    static SmoothingDistribution generalized_gaussian(double q, double b);
    static SmoothingDistribution generalized_gaussian_sigma(double q, double sigma);
    static SmoothingDistribution gaussian(double sigma) { return generalized_gaussian_sigma(2.0, sigma); }
    static SmoothingDistribution uniform_linf(double b);
    static SmoothingDistribution uniform_l1(double b);

    /// Parses "gengauss:q=<q>,sigma=<s>" (or ",b=<b>"), "uniform-linf:b=<b>"
    /// (sigma also accepted, b = sqrt(3) sigma) and "uniform-l1:b=<b>".
    static SmoothingDistribution parse(std::string_view spec);

    const Params& params() const { return params_; }

    bool is_gaussian() const;
    // True for the coordinate-i.i.d. families.
    bool is_iid() const { return !std::holds_alternative<UniformL1>(params_); }

    /// Per-coordinate standard deviation for the i.i.d. families.
    std::optional<double> coordinate_sigma() const;

    // Canonical spec string, parseable by parse().
    std::string to_string() const;

private:
    explicit SmoothingDistribution(Params p) : params_(p) {}
    Params params_;
};

struct NoiseSample {
    std::vector<double> delta;
};

double gengauss_normalizer(double q, double b);
double sigma_from_scale(double q, double b);
double scale_from_sigma(double q, double sigma);

/// E[Z^n] for even n under the generalized Gaussian. Odd moments vanish by
/// symmetry and are rejected here.
double even_moment(double q, double b, int n);

/// Joint log density. Uniform variants return -infinity outside the support.
double log_density(const SmoothingDistribution& dist, std::span<const double> z);

// Fills `out` with one noise draw of dimension out.size().
void sample_into(const SmoothingDistribution& dist, std::span<double> out, RngStream& rng);
NoiseSample sample(const SmoothingDistribution& dist, std::size_t d, RngStream& rng);

/// Gamma(shape, 1) variate returned as its logarithm, so that tiny shapes
/// (large q) do not underflow.
double log_gamma_variate(double shape, RngStream& rng);

inline constexpr double kMgfConstant = 1.85;

struct MgfCheck {
    double lhs;  // E[exp(tZ)] by quadrature
    double rhs;  // 1 / (1 - c^2 t^2 sigma^2)
    bool holds;
};

/// Numerically checks E[exp(tZ)] <= sum_m (c^2 t^2 sigma^2)^m for the
/// generalized Gaussian with q >= 1 and c = 1.85.
MgfCheck mgf_bound_check(double q, double b, double t);

// sqrt(Gamma(1/q) / Gamma(3/q)); the ratio b / sigma.
double lemma1_constant(double q);

}  // namespace certlab
