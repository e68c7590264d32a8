#include "certlab/bounds.hpp"
#include "certlab/certify.hpp"
#include "certlab/worstcase.hpp"
#include "oracles.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

using namespace certlab;

namespace {

// P(S <= s) for S a sum of d Laplace(b) variables, S = b (G1 - G2) with
// G1, G2 ~ Gamma(d, 1): integrate the density of G2 against the CDF of G1.
double laplace_sum_cdf(std::size_t d, double b, double s) {
    const double x = s / b;
    const double a = static_cast<double>(d);
    const double hi = a + 60.0 * std::sqrt(a) + 60.0;
    const long double v = oracle::simpson(
        [&](long double y) {
            const double yy = static_cast<double>(y);
            const double dens = std::exp((a - 1) * std::log(std::max(yy, 1e-300)) - yy - std::lgamma(a));
            const double arg = x + yy;
            return static_cast<long double>(dens * (arg <= 0 ? 0.0 : boost::math::gamma_p(a, arg)));
        },
        0.0L, hi, 40000);
    return static_cast<double>(v);
}

double laplace_sum_quantile(std::size_t d, double b, double p) {
    const double span = 40.0 * b * std::sqrt(static_cast<double>(d));
    return oracle::bisect([&](long double s) { return laplace_sum_cdf(d, b, static_cast<double>(s)) - p; }, -span,
                          span, 70);
}

}  // namespace

TEST_CASE("gaussian half-space thresholds are exact") {
    const auto c = build_halfspace(SmoothingDistribution::gaussian(1.0), 16, ProbabilityPair(0.9, 0.1));
    CHECK(c.exact);
    CHECK(c.s1 == doctest::Approx(oracle::ref::halfspace_s_16_09).epsilon(1e-13));
    CHECK(c.s2 == doctest::Approx(oracle::ref::halfspace_s_16_09).epsilon(1e-13));
    CHECK(c.eps_star == doctest::Approx(oracle::ref::halfspace_eps_16_09).epsilon(1e-13));
    CHECK(c.s1_stderr == 0.0);
    // |P(S <= s1) - p1| vanishes in closed form.
    CHECK(static_cast<double>(oracle::phi(c.s1 / 4.0)) == doctest::Approx(0.9).epsilon(1e-13));

    const auto half = build_halfspace(SmoothingDistribution::gaussian(1.0), 16, ProbabilityPair(0.5, 0.5));
    CHECK(half.s1 == 0.0);
    CHECK(half.s2 == 0.0);
    CHECK(half.eps_star == 0.0);

    const auto gap = build_halfspace(SmoothingDistribution::gaussian(2.0), 9, ProbabilityPair(0.8, 0.05));
    CHECK(gap.s1 < gap.s2);
    CHECK(gap.s1 == doctest::Approx(6.0 * oracle::phi_inv(0.8)).epsilon(1e-12));
    CHECK(gap.s2 == doctest::Approx(6.0 * oracle::phi_inv(0.95)).epsilon(1e-12));
}

TEST_CASE("laplace half-space thresholds match the exact sum quantile") {
    const std::size_t d = 64;
    const auto dist = SmoothingDistribution::generalized_gaussian(1.0, 1.0);
    const auto c = build_halfspace(dist, d, ProbabilityPair(0.9, 0.1), HalfSpaceOptions{1'000'000, 21, 1});
    CHECK_FALSE(c.exact);
    CHECK(c.s1_stderr > 0.0);
    const double s_exact = laplace_sum_quantile(d, 1.0, 0.9);
    // Sanity of the oracle itself: the sum has variance 2 d b^2, CLT value nearby.
    CHECK(s_exact == doctest::Approx(std::sqrt(128.0) * oracle::phi_inv(0.9)).epsilon(0.02));
    CHECK(std::fabs(c.s1 - s_exact) <= 3.0 * c.s1_stderr);
    CHECK(std::fabs(c.s2 - s_exact) <= 3.0 * c.s2_stderr);
}

TEST_CASE("property: MC thresholds hit their quantiles on fresh draws") {
    const std::size_t d = 16;
    const auto dist = SmoothingDistribution::generalized_gaussian_sigma(4.0, 1.0);
    const auto c = build_halfspace(dist, d, ProbabilityPair(0.7, 0.3), HalfSpaceOptions{1'000'000, 5, 1});
    RngStream rng(99, 1);
    const std::size_t n = 1'000'000;
    std::vector<double> z(d);
    std::size_t below = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sample_into(dist, z, rng);
        double s = 0;
        for (double v : z) s += v;
        if (s <= c.s1) ++below;
    }
    const double f = static_cast<double>(below) / n;
    // Fresh draw and threshold each carry binomial-size error.
    CHECK(std::fabs(f - 0.7) <= 3.0 * std::sqrt(2.0 * 0.7 * 0.3 / n));
}

TEST_CASE("half-space construction rejects invalid inputs") {
    const auto g = SmoothingDistribution::gaussian(1.0);
    CHECK_THROWS_AS(build_halfspace(SmoothingDistribution::uniform_l1(1.0), 4, ProbabilityPair(0.9, 0.1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_halfspace(g, 4, ProbabilityPair(0.4, 0.3)), std::invalid_argument);
    CHECK_THROWS_AS(build_halfspace(g, 4, ProbabilityPair(0.7, 0.4)), std::invalid_argument);
    CHECK_THROWS_AS(build_halfspace(g, 4, ProbabilityPair(1.0, 0.0)), std::invalid_argument);
    CHECK_THROWS_AS(build_halfspace(g, 0, ProbabilityPair(0.9, 0.1)), std::invalid_argument);
}

TEST_CASE("half-space classifier labels") {
    const auto c = build_halfspace(SmoothingDistribution::gaussian(1.0), 4, ProbabilityPair(0.8, 0.05));
    CHECK(halfspace_classify(c, std::vector<double>(4, 0.0)) == 1);
    CHECK(halfspace_classify(c, std::vector<double>{c.s2 + 1.0, 0, 0, 0}) == 2);
    CHECK(halfspace_classify(c, std::vector<double>{0.5 * (c.s1 + c.s2), 0, 0, 0}) == 3);
    CHECK(halfspace_classify(c, std::vector<double>{c.s1, 0, 0, 0}) == 1);
    CHECK(halfspace_classify(c, std::vector<double>{c.s2, 0, 0, 0}) == 2);
    CHECK_THROWS_AS(halfspace_classify(c, std::vector<double>(3, 0.0)), std::invalid_argument);
    const HalfSpaceClassifier h(c);
    CHECK(h.num_classes() == 4);
    CHECK(h.classify(std::vector<double>(4, 0.0)) == 1);
}

TEST_CASE("flip verification against the gaussian closed form") {
    const std::size_t d = 16;
    const auto c = build_halfspace(SmoothingDistribution::gaussian(1.0), d, ProbabilityPair::binary(0.9));
    const std::vector<double> ms{0.0, 0.9, 1.0, 1.1, 2.0};
    const std::size_t n = 100'000;
    const auto rows = verify_flip(c, ms, n, RngStream(8, 0));
    REQUIRE(rows.size() == ms.size());
    for (const auto& r : rows) {
        const double mean = r.multiplier * c.eps_star * d;
        const double p1 = static_cast<double>(oracle::phi((c.s1 - mean) / 4.0));
        const double p2 = 1.0 - static_cast<double>(oracle::phi((c.s2 - mean) / 4.0));
        CHECK(std::fabs(r.p1_hat - p1) <= 3.0 * std::sqrt(p1 * (1 - p1) / n) + 1e-12);
        CHECK(std::fabs(r.p2_hat - p2) <= 3.0 * std::sqrt(p2 * (1 - p2) / n) + 1e-12);
        if (r.multiplier < 1.0) CHECK(r.sign == 1);
        if (r.multiplier > 1.0) CHECK(r.sign == -1);
        if (r.multiplier == 1.0) CHECK(std::fabs(r.p1_hat - r.p2_hat) <= 3.0 * r.diff_stderr);
    }
    CHECK_THROWS_AS(verify_flip(c, ms, 9999, RngStream(8, 0)), std::invalid_argument);
}

TEST_CASE("flip verification is independent of worker count") {
    const auto c = build_halfspace(SmoothingDistribution::uniform_linf(1.0), 8, ProbabilityPair::binary(0.7),
                                   HalfSpaceOptions{100'000, 1, 1});
    const std::vector<double> ms{0.9, 1.1};
    const auto a = verify_flip(c, ms, 30'000, RngStream(2, 0), 1);
    const auto b = verify_flip(c, ms, 30'000, RngStream(2, 0), 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].p1_hat == b[i].p1_hat);
        CHECK(a[i].p2_hat == b[i].p2_hat);
    }
    const auto c2 = build_halfspace(SmoothingDistribution::uniform_linf(1.0), 8, ProbabilityPair::binary(0.7),
                                    HalfSpaceOptions{100'000, 1, 4});
    CHECK(c2.s1 == c.s1);
}

TEST_CASE("property: flip norm never exceeds the iid bound") {
    for (std::size_t d : {1u, 4u, 64u, 3072u}) {
        for (double p1 : {0.5, 0.7, 0.9, 0.999}) {
            for (double frac : {1.0, 0.2}) {
                const ProbabilityPair pair(p1, (1 - p1) * frac);
                const auto c = build_halfspace(SmoothingDistribution::gaussian(1.3), d, pair);
                for (double p : {2.0, 5.0, std::numeric_limits<double>::infinity()}) {
                    const NormOrder np(p);
                    CHECK(flip_lp_norm(c, np) ==
                          doctest::Approx(c.eps_star * std::pow(static_cast<double>(d), 1.0 / p)).epsilon(1e-13));
                    CHECK(flip_lp_norm(c, np) <= iid_upper_bound(1.3, d, np, pair).value);
                }
            }
        }
    }
}

TEST_CASE("shifted box overlap") {
    CHECK(box_overlap_prob(1.0, 2, 0.2) == doctest::Approx(0.19).epsilon(1e-14));
    CHECK(box_overlap_prob(1.0, 7, 2.0) == 1.0);
    for (std::size_t d : {1u, 2u, 5u, 100u, 1024u}) {
        const double thr = box_flip_threshold(1.5, d);
        CHECK(thr == doctest::Approx(3.0 * (1.0 - std::pow(2.0, -1.0 / d))).epsilon(1e-13));
        CHECK(box_overlap_prob(1.5, d, thr) == doctest::Approx(0.5).epsilon(1e-13));
        CHECK(thr < 3.0 / d);
    }
    const auto rep = box_flip_verify(ShiftedBoxConstruction(1.0, 5, 0.2), 100'000, RngStream(4, 0));
    CHECK(rep.expected == doctest::Approx(1 - std::pow(0.9, 5)).epsilon(1e-14));
    CHECK(std::fabs(rep.rho_hat_x - rep.expected) <= 3 * rep.stderr_x);
    CHECK(std::fabs(rep.rho_hat_xprime - rep.expected) <= 3 * rep.stderr_xprime);
    CHECK(rep.consistent);
    CHECK(rep.matches_expected);
    CHECK_THROWS_AS(ShiftedBoxConstruction(1.0, 3, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ShiftedBoxConstruction(1.0, 3, 2.5), std::invalid_argument);
    CHECK_NOTHROW(ShiftedBoxConstruction(1.0, 3, 2.0));
}

TEST_CASE("l1 ball geometry") {
    CHECK(l1_ball_volume(1.0, 1) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(l1_ball_volume(1.0, 2) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(l1_ball_volume(2.0, 3) == doctest::Approx(64.0 / 6.0).epsilon(1e-14));
    CHECK(l1_ball_volume(1.0, 10) == doctest::Approx(1024.0 / 3628800.0).epsilon(1e-13));
    CHECK(l1_overlap_prob_lower(1.0, 2, 0.2) == doctest::Approx(0.19).epsilon(1e-14));
    CHECK(l1_overlap_prob_lower(1.0, 4, 2.0) == 1.0);

    // A point in both balls near their common centre, and one outside V2.
    const auto inside = l1_intersection_check(1.0, 2, 0.4, std::vector<double>{0.2, 0.1});
    CHECK(inside.in_intersection);
    CHECK(inside.lemma_holds);
    const auto outside = l1_intersection_check(1.0, 2, 0.4, std::vector<double>{-0.9, 0.0});
    CHECK_FALSE(outside.in_intersection);
    CHECK(outside.lemma_holds);
}

TEST_CASE("l1 containment exhaustive grid") {
    for (std::size_t d : {2u, 3u}) {
        for (double eps : {0.3, 1.0}) {
            const auto rep = lemma2_grid_check(1.0, d, eps, 0.02);
            CHECK(rep.violations == 0);
            CHECK(rep.in_intersection > 0);
            CHECK(rep.points > rep.in_intersection);
        }
    }
}

TEST_CASE("l1 overlap mass by Monte Carlo") {
    const auto rep = l1_overlap_mc(ShiftedL1Construction(1.0, 2, 0.2), 1'000'000, RngStream(6, 0));
    CHECK(rep.lower_bound == doctest::Approx(0.19).epsilon(1e-14));
    CHECK(rep.rho_hat >= rep.lower_bound - 3 * rep.stderr_);
    CHECK(rep.holds);
    // In 2d the exact mass of V1 \ V2 is computable: the intersection of two
    // unit diamonds shifted by eps along x1 has area (2 - eps)^2 / 2.
    const double exact = 1.0 - (2.0 - 0.2) * (2.0 - 0.2) / 2.0 / 2.0;
    CHECK(std::fabs(rep.rho_hat - exact) <= 3 * rep.stderr_);

    const auto disjoint = l1_overlap_mc(ShiftedL1Construction(1.0, 3, 2.0), 20'000, RngStream(6, 1));
    CHECK(disjoint.rho_hat == 1.0);
    CHECK_THROWS_AS(ShiftedL1Construction(1.0, 3, -0.1), std::invalid_argument);
}
