#pragma once

#include "certlab/classifier.hpp"
#include "certlab/distributions.hpp"
#include "certlab/rng.hpp"
#include "certlab/statkernel.hpp"
#include "certlab/types.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace certlab {

inline constexpr int kAbstain = -1;

struct CertifyConfig {
    std::size_t n0 = 100;
    std::size_t n = 100'000;
    ConfidenceLevel alpha{0.001};
    std::uint64_t seed = 0;
    // Sampling threads; never affects results.
    unsigned workers = 1;
};

struct RadiusEntry {
    NormOrder p;
    double radius;
};

struct CertificateResult {
    int predicted_class = kAbstain;
    // Class whose probability p1_lower bounds (the n0-sample plurality).
    int candidate = kAbstain;
    bool abstain = true;
    double p1_lower = 0.0;
    double p2_upper = 1.0;
    std::vector<RadiusEntry> radii;
    // False when radii were requested under a non-Gaussian distribution,
    // for which no tight certificate exists.
    bool certificate_available = true;
    std::size_t n0 = 0;
    std::size_t n = 0;
    double alpha = 0.0;
    std::uint64_t seed = 0;
    std::size_t dimension = 0;
};

/// Per-class counts of h(x + delta) over n noise draws.
std::vector<std::uint64_t> count_classes(const BaseClassifier& h, std::span<const double> x,
                                         const SmoothingDistribution& dist, std::size_t n,
                                         const RngStream& rng, unsigned workers = 1);

// Plurality label over n0 noisy evaluations; ties go to the lowest label.
int smoothed_predict(const BaseClassifier& h, std::span<const double> x, const SmoothingDistribution& dist,
                     std::size_t n0, const RngStream& rng, unsigned workers = 1);

double estimate_p1_lower(const BaseClassifier& h, std::span<const double> x, const SmoothingDistribution& dist,
                         int candidate, std::size_t n, ConfidenceLevel alpha, const RngStream& rng,
                         unsigned workers = 1);

double p2_upper_from_p1(double p1_lower);

/// sigma / 2 * (Phi^-1(p1) - Phi^-1(p2)); requires 0 < p2 <= p1 < 1.
double gaussian_l2_radius(double sigma, ProbabilityPair pair);

/// l2 radius converted to an lp radius through ||v||_2 <= d^(1/2 - 1/p) ||v||_p.
/// Only valid for p >= 2.
double gaussian_lp_radius(double sigma, std::size_t d, NormOrder p, ProbabilityPair pair);

/// Predict with n0 samples, lower-bound the candidate's probability with n
/// samples, and emit radii for each requested p. Abstains when
/// p1_lower <= 1/2. Deterministic in (h, x, dist, config.seed, p_list).
CertificateResult certify(const BaseClassifier& h, std::span<const double> x, const SmoothingDistribution& dist,
                          const CertifyConfig& config, std::span<const NormOrder> p_list);

}  // namespace certlab
