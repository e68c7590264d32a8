#pragma once

#include "certlab/classifier.hpp"
#include "certlab/distributions.hpp"
#include "certlab/rng.hpp"
#include "certlab/types.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace certlab {

// ---------------------------------------------------------------------------
// Half-space construction for i.i.d. noise.
//
// With S = sum_i Z_i, the classifier sends {sum w <= s1} to class 1 and
// {sum w >= s2} to class 2, where P(S <= s1) = p1 and P(S >= s2) = p2. The
// gap between the thresholds gets a dummy class 3. Shifting the input to
// eps * (1, ..., 1) moves the mean of the sum by eps * d, and the smoothed
// prediction flips once eps * d passes (s1 + s2) / 2.
// ---------------------------------------------------------------------------

struct HalfSpaceOptions {
    // Samples of S used when the thresholds have no closed form.
    std::size_t quantile_samples = 1'000'000;
    std::uint64_t seed = 0;
    unsigned workers = 1;
};

struct HalfSpaceConstruction {
    SmoothingDistribution dist;
    std::size_t d;
    ProbabilityPair pair;
    double s1;
    double s2;
    // Zero when the thresholds are exact (Gaussian noise).
    double s1_stderr;
    double s2_stderr;
    double eps_star;
    bool exact;
};

/// Builds the thresholds. Gaussian noise uses s = sigma sqrt(d) Phi^-1(.)
/// directly; other i.i.d. families use Monte-Carlo quantiles of S with an
/// order-statistic standard error. Rejects uniform-l1 (not i.i.d.), p1 < 1/2,
/// p1 + p2 > 1 and degenerate probabilities.
HalfSpaceConstruction build_halfspace(const SmoothingDistribution& dist, std::size_t d, ProbabilityPair pair,
                                      const HalfSpaceOptions& options = {});

// Returns 1, 2 or 3 (gap).
int halfspace_classify(const HalfSpaceConstruction& c, std::span<const double> w);

// BaseClassifier view of halfspace_classify; label 0 is never produced.
class HalfSpaceClassifier final : public BaseClassifier {
public:
    explicit HalfSpaceClassifier(const HalfSpaceConstruction& c) : c_(c) {}
    int num_classes() const override { return 4; }
    int classify(std::span<const double> z) const override { return halfspace_classify(c_, z); }

private:
    HalfSpaceConstruction c_;
};

struct FlipRow {
    double multiplier;
    double p1_hat;
    double p2_hat;
    // Standard error of p1_hat - p2_hat (multinomial).
    double diff_stderr;
    // +1 class 1 wins, -1 class 2 wins, 0 inconclusive at 99% confidence.
    int sign;
    bool conclusive() const { return sign != 0; }
};

/// Estimates (p1, p2) of the smoothed construction at x' = m * eps_star * 1
/// for each multiplier m with n samples. Requires n >= 10^4.
std::vector<FlipRow> verify_flip(const HalfSpaceConstruction& c, std::span<const double> multipliers,
                                 std::size_t n, const RngStream& rng, unsigned workers = 1);

// ||eps_star * 1||_p = eps_star * d^(1/p).
double flip_lp_norm(const HalfSpaceConstruction& c, NormOrder p);

// ---------------------------------------------------------------------------
// Uniform l_inf box shifted along the all-ones direction.
// ---------------------------------------------------------------------------

struct ShiftedBoxConstruction {
    // eps must lie in (0, 2b]; 2b gives disjoint boxes.
    ShiftedBoxConstruction(double b, std::size_t d, double eps);

    double b;
    std::size_t d;
    double eps;
};

/// Mass of V1 \ V2 under uniform noise on V1: 1 - (1 - eps/2b)^d.
double box_overlap_prob(double b, std::size_t d, double eps);

/// Shift at which the overlap mass reaches 1/2: 2b (1 - 2^(-1/d)), < 2b/d.
double box_flip_threshold(double b, std::size_t d);

struct OverlapReport {
    double rho_hat_x;        // P(class 1) sampling around x
    double rho_hat_xprime;   // P(class 2) sampling around x'
    double stderr_x;
    double stderr_xprime;
    double expected;
    bool consistent;         // |rho_x - rho_x'| <= 3 joint stderr
    bool matches_expected;   // both within 3 stderr of `expected`
};

OverlapReport box_flip_verify(const ShiftedBoxConstruction& box, std::size_t n, const RngStream& rng,
                              unsigned workers = 1);

// ---------------------------------------------------------------------------
// Uniform l1 ball shifted by eps along the first coordinate.
// ---------------------------------------------------------------------------

struct ShiftedL1Construction {
    ShiftedL1Construction(double b, std::size_t d, double eps);

    double b;
    std::size_t d;
    double eps;
};

struct IntersectionCheck {
    bool in_intersection;
    // V1 and V2 intersect inside the l1 ball of radius b - eps/2 centred at
    // (eps/2, 0, ..., 0).
    bool lemma_holds;
};

IntersectionCheck l1_intersection_check(double b, std::size_t d, double eps, std::span<const double> w);

struct GridCheckReport {
    std::uint64_t points = 0;
    std::uint64_t in_intersection = 0;
    std::uint64_t violations = 0;
};

/// Runs l1_intersection_check on every point of the grid with spacing `step`
/// covering [-b - eps, b + eps]^d.
GridCheckReport lemma2_grid_check(double b, std::size_t d, double eps, double step);

// 2^d b^d / d!
double l1_ball_volume(double b, std::size_t d);

/// Lower bound 1 - (1 - eps/2b)^d on the mass of V1 \ V2 under uniform l1
/// noise at x.
double l1_overlap_prob_lower(double b, std::size_t d, double eps);

struct L1OverlapReport {
    double rho_hat;
    double stderr_;
    double lower_bound;
    bool holds;  // rho_hat >= lower_bound - 3 stderr
};

L1OverlapReport l1_overlap_mc(const ShiftedL1Construction& c, std::size_t n, const RngStream& rng,
                              unsigned workers = 1);

}  // namespace certlab
