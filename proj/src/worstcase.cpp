#include "certlab/worstcase.hpp"

#include "certlab/certify.hpp"
#include "certlab/montecarlo.hpp"
#include "certlab/statkernel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace certlab {

namespace {

struct Quantile {
    double value;
    double stderr_;
};

// Empirical quantile of sorted data plus a distribution-free standard error
// from the spread of neighbouring order statistics.
Quantile empirical_quantile(const std::vector<double>& sorted, double prob) {
    const double n = static_cast<double>(sorted.size());
    const auto last = static_cast<std::ptrdiff_t>(sorted.size()) - 1;
    auto at = [&](double rank) {
        const auto i = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(std::ceil(rank)) - 1, 0, last);
        return sorted[static_cast<std::size_t>(i)];
    };
    const double spread = std::sqrt(n * prob * (1.0 - prob));
    const double rank = n * prob;
    return {at(rank), 0.5 * (at(rank + spread) - at(rank - spread))};
}

void require_n(std::size_t n, const char* what) {
    if (n < 10'000) throw std::invalid_argument(fmt::format("{}: needs at least 10^4 samples (got {})", what, n));
}

double one_sided_99() { return std_normal_inv_cdf(0.99); }

}  // namespace

HalfSpaceConstruction build_halfspace(const SmoothingDistribution& dist, std::size_t d, ProbabilityPair pair,
                                      const HalfSpaceOptions& options) {
    if (!dist.is_iid()) {
        throw std::invalid_argument("build_halfspace: needs coordinate-i.i.d. noise (uniform-l1 is not)");
    }
    if (d < 1) throw std::invalid_argument("build_halfspace: d must be at least 1");
    if (pair.p1 < 0.5) throw std::invalid_argument("build_halfspace: requires p1 >= 1/2");
    if (pair.p1 + pair.p2 > 1.0 + 1e-12) throw std::invalid_argument("build_halfspace: requires p1 + p2 <= 1");
    if (!(pair.p1 < 1.0 && pair.p2 > 0.0)) {
        throw std::invalid_argument("build_halfspace: thresholds need p1 < 1 and p2 > 0");
    }

    const double dd = static_cast<double>(d);
    if (dist.is_gaussian()) {
        const double scale = *dist.coordinate_sigma() * std::sqrt(dd);
        const double s1 = scale * std_normal_inv_cdf(pair.p1);
        const double s2 = -scale * std_normal_inv_cdf(pair.p2);
        return {dist, d, pair, s1, s2, 0.0, 0.0, (s1 + s2) / (2.0 * dd), true};
    }

    const std::size_t n = options.quantile_samples;
    if (n < 1000) throw std::invalid_argument("build_halfspace: quantile_samples must be at least 1000");
    std::vector<double> sums(n);
    const RngStream root(options.seed, 0x5157);
    for_each_chunk(n, options.workers, root, [&](std::size_t c, std::size_t count, RngStream& rng) {
        std::vector<double> z(d);
        for (std::size_t i = 0; i < count; ++i) {
            sample_into(dist, z, rng);
            sums[c * kChunkSize + i] = std::accumulate(z.begin(), z.end(), 0.0);
        }
    });
    std::sort(sums.begin(), sums.end());
    const Quantile q1 = empirical_quantile(sums, pair.p1);
    const Quantile q2 = empirical_quantile(sums, 1.0 - pair.p2);
    return {dist, d, pair, q1.value, q2.value, q1.stderr_, q2.stderr_, (q1.value + q2.value) / (2.0 * dd), false};
}

int halfspace_classify(const HalfSpaceConstruction& c, std::span<const double> w) {
    if (w.size() != c.d) {
        throw std::invalid_argument(fmt::format("halfspace_classify: expected {} coordinates, got {}", c.d, w.size()));
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (total <= c.s1) return 1;
    if (total >= c.s2) return 2;
    return 3;
}

std::vector<FlipRow> verify_flip(const HalfSpaceConstruction& c, std::span<const double> multipliers,
                                 std::size_t n, const RngStream& rng, unsigned workers) {
    require_n(n, "verify_flip");
    const HalfSpaceClassifier g(c);
    const double z99 = one_sided_99();
    std::vector<FlipRow> rows;
    for (std::size_t i = 0; i < multipliers.size(); ++i) {
        const double m = multipliers[i];
        const std::vector<double> shifted(c.d, m * c.eps_star);
        const auto counts = count_classes(g, shifted, c.dist, n, rng.substream(i), workers);
        const double nn = static_cast<double>(n);
        const double p1 = static_cast<double>(counts[1]) / nn;
        const double p2 = static_cast<double>(counts[2]) / nn;
        const double diff = p1 - p2;
        // Var(1{class 1} - 1{class 2}) = p1 + p2 - (p1 - p2)^2
        const double se = std::sqrt(std::max(0.0, p1 + p2 - diff * diff) / nn);
        int sign = 0;
        if (diff > z99 * se) sign = 1;
        if (diff < -z99 * se) sign = -1;
        rows.push_back({m, p1, p2, se, sign});
    }
    return rows;
}

double flip_lp_norm(const HalfSpaceConstruction& c, NormOrder p) {
    return c.eps_star * std::exp(p.reciprocal() * std::log(static_cast<double>(c.d)));
}

namespace {

void require_shift(double b, std::size_t d, double eps) {
    if (!(b > 0.0) || !std::isfinite(b)) throw std::invalid_argument("shift construction: b must be positive");
    if (d < 1) throw std::invalid_argument("shift construction: d must be at least 1");
    if (!(eps > 0.0 && eps <= 2.0 * b)) {
        throw std::invalid_argument(fmt::format("shift eps = {} outside (0, 2b] with b = {}", eps, b));
    }
}

// 1 - (1 - eps/2b)^d without cancellation for small eps.
double shifted_mass(double b, std::size_t d, double eps) {
    if (eps == 2.0 * b) return 1.0;
    return -std::expm1(static_cast<double>(d) * std::log1p(-eps / (2.0 * b)));
}

}  // namespace

ShiftedBoxConstruction::ShiftedBoxConstruction(double b_, std::size_t d_, double eps_) : b(b_), d(d_), eps(eps_) {
    require_shift(b, d, eps);
}

double box_overlap_prob(double b, std::size_t d, double eps) {
    require_shift(b, d, eps);
    return shifted_mass(b, d, eps);
}

double box_flip_threshold(double b, std::size_t d) {
    if (!(b > 0.0)) throw std::invalid_argument("box_flip_threshold: b must be positive");
    if (d < 1) throw std::invalid_argument("box_flip_threshold: d must be at least 1");
    return -2.0 * b * std::expm1(-std::numbers::ln2 / static_cast<double>(d));
}

OverlapReport box_flip_verify(const ShiftedBoxConstruction& box, std::size_t n, const RngStream& rng,
                              unsigned workers) {
    require_n(n, "box_flip_verify");
    const auto noise = SmoothingDistribution::uniform_linf(box.b);
    std::vector<std::uint64_t> hits_x(chunk_count(n), 0);
    std::vector<std::uint64_t> hits_xp(chunk_count(n), 0);
    for_each_chunk(n, workers, rng, [&](std::size_t c, std::size_t count, RngStream& stream) {
        std::vector<double> z(box.d);
        std::uint64_t hx = 0;
        std::uint64_t hxp = 0;
        for (std::size_t i = 0; i < count; ++i) {
            // Around x: class 1 iff the point leaves V2 = [-b + eps, b + eps]^d.
            sample_into(noise, z, stream);
            hx += std::any_of(z.begin(), z.end(), [&](double v) { return v < -box.b + box.eps; });
            // Around x' = eps * 1: class 2 iff the point leaves V1 = [-b, b]^d.
            sample_into(noise, z, stream);
            hxp += std::any_of(z.begin(), z.end(), [&](double v) { return v + box.eps > box.b; });
        }
        hits_x[c] = hx;
        hits_xp[c] = hxp;
    });
    const double nn = static_cast<double>(n);
    const double rx = static_cast<double>(std::accumulate(hits_x.begin(), hits_x.end(), std::uint64_t{0})) / nn;
    const double rxp = static_cast<double>(std::accumulate(hits_xp.begin(), hits_xp.end(), std::uint64_t{0})) / nn;
    const double sx = binomial_stderr(rx, n);
    const double sxp = binomial_stderr(rxp, n);
    const double expected = shifted_mass(box.b, box.d, box.eps);
    constexpr double slack = 1e-12;
    OverlapReport r{rx, rxp, sx, sxp, expected, false, false};
    r.consistent = std::fabs(rx - rxp) <= 3.0 * std::hypot(sx, sxp) + slack;
    r.matches_expected = std::fabs(rx - expected) <= 3.0 * sx + slack && std::fabs(rxp - expected) <= 3.0 * sxp + slack;
    return r;
}

ShiftedL1Construction::ShiftedL1Construction(double b_, std::size_t d_, double eps_) : b(b_), d(d_), eps(eps_) {
    require_shift(b, d, eps);
}

IntersectionCheck l1_intersection_check(double b, std::size_t d, double eps, std::span<const double> w) {
    require_shift(b, d, eps);
    if (w.size() != d) throw std::invalid_argument("l1_intersection_check: point has wrong dimension");
    double rest = 0.0;
    for (std::size_t i = 1; i < d; ++i) rest += std::fabs(w[i]);
    const bool in_v1 = std::fabs(w[0]) + rest <= b;
    const bool in_v2 = std::fabs(w[0] - eps) + rest <= b;
    const bool inside = in_v1 && in_v2;
    const bool holds = !inside || std::fabs(w[0] - 0.5 * eps) + rest <= b - 0.5 * eps + 1e-12;
    return {inside, holds};
}

GridCheckReport lemma2_grid_check(double b, std::size_t d, double eps, double step) {
    require_shift(b, d, eps);
    if (!(step > 0.0)) throw std::invalid_argument("lemma2_grid_check: step must be positive");
    const double lo = -b - eps;
    const auto per_axis = static_cast<std::size_t>(std::llround((2.0 * (b + eps)) / step)) + 1;
    GridCheckReport report;
    std::vector<std::size_t> idx(d, 0);
    std::vector<double> w(d, lo);
    while (true) {
        for (std::size_t i = 0; i < d; ++i) w[i] = lo + static_cast<double>(idx[i]) * step;
        const auto check = l1_intersection_check(b, d, eps, w);
        ++report.points;
        report.in_intersection += check.in_intersection;
        report.violations += !check.lemma_holds;
        std::size_t axis = 0;
        while (axis < d && ++idx[axis] == per_axis) idx[axis++] = 0;
        if (axis == d) break;
    }
    return report;
}

double l1_ball_volume(double b, std::size_t d) {
    if (!(b > 0.0)) throw std::invalid_argument("l1_ball_volume: b must be positive");
    if (d < 1) throw std::invalid_argument("l1_ball_volume: d must be at least 1");
    const double dd = static_cast<double>(d);
    return std::exp(dd * std::numbers::ln2 + dd * std::log(b) - log_gamma(dd + 1.0));
}

double l1_overlap_prob_lower(double b, std::size_t d, double eps) {
    require_shift(b, d, eps);
    return shifted_mass(b, d, eps);
}

L1OverlapReport l1_overlap_mc(const ShiftedL1Construction& c, std::size_t n, const RngStream& rng,
                              unsigned workers) {
    require_n(n, "l1_overlap_mc");
    const auto noise = SmoothingDistribution::uniform_l1(c.b);
    std::vector<std::uint64_t> hits(chunk_count(n), 0);
    for_each_chunk(n, workers, rng, [&](std::size_t chunk, std::size_t count, RngStream& stream) {
        std::vector<double> z(c.d);
        std::uint64_t h = 0;
        for (std::size_t i = 0; i < count; ++i) {
            sample_into(noise, z, stream);
            double rest = 0.0;
            for (std::size_t j = 1; j < c.d; ++j) rest += std::fabs(z[j]);
            h += std::fabs(z[0] - c.eps) + rest > c.b;
        }
        hits[chunk] = h;
    });
    const double rho = static_cast<double>(std::accumulate(hits.begin(), hits.end(), std::uint64_t{0})) /
                       static_cast<double>(n);
    const double se = binomial_stderr(rho, n);
    const double lower = shifted_mass(c.b, c.d, c.eps);
    return {rho, se, lower, rho >= lower - 3.0 * se - 1e-12};
}

}  // namespace certlab
